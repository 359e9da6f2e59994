use super::network::ParamMap;
use crate::tensor::{Real, Tensor};

pub const EMBEDDINGS: &str = "embeddings";

/// Every learned tensor of the model. Gradients use the same type.
///
/// Qualified names: `embeddings`, `encoder.<name>`, `decoder.<name>` and
/// `hyper.<name>`; iteration order is fixed (that order, then by name).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    /// `[char_count][latent_dim]`, shared by encoder and decoder.
    pub char_embeddings: Tensor<T>,
    pub encoder: ParamMap<T>,
    /// Embedding MLP, intermediate convolutions and instance-norm affine terms.
    pub decoder: ParamMap<T>,
    /// One `F-R-F` MLP per transpose convolution, producing its filters.
    pub hyper: ParamMap<T>,
}

impl<T: Real> ModelParams<T> {
    /// Assembles parameters from `(qualified name, tensor)` pairs.
    pub fn from_named(tensors: impl IntoIterator<Item = (String, Tensor<T>)>) -> Option<Self> {
        let mut embeddings = None;
        let (mut encoder, mut decoder, mut hyper) = (ParamMap::new(), ParamMap::new(), ParamMap::new());
        for (name, t) in tensors {
            if name == EMBEDDINGS {
                embeddings = Some(t);
                continue;
            }
            let (group, rest) = name.split_once('.')?;
            let map = match group {
                "encoder" => &mut encoder,
                "decoder" => &mut decoder,
                "hyper" => &mut hyper,
                _ => return None,
            };
            map.insert(rest.to_string(), t);
        }
        Some(ModelParams {
            char_embeddings: embeddings?,
            encoder,
            decoder,
            hyper,
        })
    }

    pub fn zeros_like(&self) -> Self {
        let z = |m: &ParamMap<T>| m.iter().map(|(k, v)| (k.clone(), v.zeros_like())).collect();
        ModelParams {
            char_embeddings: self.char_embeddings.zeros_like(),
            encoder: z(&self.encoder),
            decoder: z(&self.decoder),
            hyper: z(&self.hyper),
        }
    }

    pub fn embedding(&self, ch: usize) -> &[T] {
        let k = self.char_embeddings.shape[1];
        &self.char_embeddings.data[ch * k..(ch + 1) * k]
    }

    pub fn embedding_mut(&mut self, ch: usize) -> &mut [T] {
        let k = self.char_embeddings.shape[1];
        &mut self.char_embeddings.data[ch * k..(ch + 1) * k]
    }

    pub fn iter(&self) -> impl Iterator<Item = (String, &Tensor<T>)> {
        std::iter::once((EMBEDDINGS.to_string(), &self.char_embeddings))
            .chain(self.encoder.iter().map(|(k, v)| (format!("encoder.{k}"), v)))
            .chain(self.decoder.iter().map(|(k, v)| (format!("decoder.{k}"), v)))
            .chain(self.hyper.iter().map(|(k, v)| (format!("hyper.{k}"), v)))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (String, &mut Tensor<T>)> {
        std::iter::once((EMBEDDINGS.to_string(), &mut self.char_embeddings))
            .chain(self.encoder.iter_mut().map(|(k, v)| (format!("encoder.{k}"), v)))
            .chain(self.decoder.iter_mut().map(|(k, v)| (format!("decoder.{k}"), v)))
            .chain(self.hyper.iter_mut().map(|(k, v)| (format!("hyper.{k}"), v)))
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        if name == EMBEDDINGS {
            return Some(&self.char_embeddings);
        }
        let (group, rest) = name.split_once('.')?;
        match group {
            "encoder" => self.encoder.get(rest),
            "decoder" => self.decoder.get(rest),
            "hyper" => self.hyper.get(rest),
            _ => None,
        }
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        if name == EMBEDDINGS {
            return Some(&mut self.char_embeddings);
        }
        let (group, rest) = name.split_once('.')?;
        match group {
            "encoder" => self.encoder.get_mut(rest),
            "decoder" => self.decoder.get_mut(rest),
            "hyper" => self.hyper.get_mut(rest),
            _ => None,
        }
    }

    pub fn add_assign(&mut self, other: &ModelParams<T>) {
        for ((_, a), (_, b)) in self.iter_mut().zip(other.iter()) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, factor: T) {
        for (_, t) in self.iter_mut() {
            t.scale(factor);
        }
    }

    pub fn num_values(&self) -> usize {
        self.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|(_, t)| t.is_finite())
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        let c = |m: &ParamMap<T>| m.iter().map(|(k, v)| (k.clone(), v.cast())).collect();
        ModelParams {
            char_embeddings: self.char_embeddings.cast(),
            encoder: c(&self.encoder),
            decoder: c(&self.decoder),
            hyper: c(&self.hyper),
        }
    }
}
