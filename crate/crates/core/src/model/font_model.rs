use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::*;
use super::latent::{FontLatent, FontPosterior, LOG_VAR_LIMIT};
use super::network::{ActShape, Cache, Network, ParamMap, TKernel};
use super::params::{ModelParams, EMBEDDINGS};
use crate::data::ObservationMask;
use crate::dct::Dct2;
use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

#[derive(Clone, Debug)]
struct HyperNet {
    net: Network,
    in_ch: usize,
    out_ch: usize,
}

impl HyperNet {
    fn kernel_len(&self) -> usize {
        self.in_ch * self.out_ch * KERNEL * KERNEL
    }
}

/// Architecture built from a [`ModelConfig`]; stateless apart from shapes.
/// Parameters live in [`ModelParams`] and are passed to every call.
#[derive(Clone, Debug)]
pub struct FontModel {
    config: ModelConfig,
    decoder: Network,
    encoder_pre: Network,
    encoder_post: Network,
    hypers: Vec<HyperNet>,
}

/// Everything the encoder backward pass needs.
#[derive(Clone, Debug)]
pub struct EncodeTape<T> {
    chars: Vec<usize>,
    pre: Vec<Vec<Cache<T>>>,
    /// For each pooled unit, the glyph (position in `chars`) that won the max.
    winners: Vec<usize>,
    post: Vec<Cache<T>>,
    raw_log_var: Vec<T>,
}

impl FontModel {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let k = config.latent_dim;
        let g = config.glyph_size;
        let eps = config.instance_norm_epsilon;
        let (decoder, enc_layers, enc_input) = match config.arch {
            Arch::Conv => (
                Network::new(&conv_decoder_layers(&config), ActShape::Vector(k), "", 0, eps),
                conv_encoder_layers(&config),
                ActShape::Map { c: 1 + k, h: g, w: g },
            ),
            Arch::Fc => (
                Network::new(&fc_decoder_layers(&config), ActShape::Vector(2 * k), "", 0, eps),
                fc_encoder_layers(&config),
                ActShape::Vector(g * g + k),
            ),
        };
        if decoder.output_shape().len() != g * g {
            return Err(Error::param(format!(
                "decoder produces {} values for a {g}x{g} glyph",
                decoder.output_shape().len()
            )));
        }
        let m = enc_layers
            .iter()
            .position(|l| *l == LayerSpec::BatchMax)
            .expect("encoder string has a batch max");
        let encoder_pre = Network::new(&enc_layers[..m], enc_input, "", 0, eps);
        let encoder_post = Network::new(&enc_layers[m + 1..], encoder_pre.output_shape(), "", m + 1, eps);
        let hypers = decoder
            .generated_filters()
            .into_iter()
            .enumerate()
            .map(|(n, (in_ch, out_ch))| {
                let outputs = in_ch * out_ch * KERNEL * KERNEL + out_ch;
                HyperNet {
                    net: Network::new(
                        &hyper_layers(config.widths.hyper_hidden, outputs),
                        ActShape::Vector(k),
                        &format!("tconv{n}."),
                        0,
                        eps,
                    ),
                    in_ch,
                    out_ch,
                }
            })
            .collect();
        Ok(FontModel {
            config,
            decoder,
            encoder_pre,
            encoder_post,
            hypers,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    pub fn glyph_pixels(&self) -> usize {
        self.config.glyph_pixels()
    }

    pub fn decoder_network(&self) -> &Network {
        &self.decoder
    }

    pub fn encoder_networks(&self) -> (&Network, &Network) {
        (&self.encoder_pre, &self.encoder_post)
    }

    pub fn num_generated_layers(&self) -> usize {
        self.hypers.len()
    }

    /// Output width of each hyper-MLP (kernel plus bias values).
    pub fn hyper_output_widths(&self) -> Vec<usize> {
        self.hypers.iter().map(|h| h.kernel_len() + h.out_ch).collect()
    }

    /// `(qualified name, shape)` of every tensor, in [`ModelParams::iter`] order.
    pub fn param_layout(&self) -> Vec<(String, Vec<usize>)> {
        self.layout_with_fan().into_iter().map(|(n, s, _)| (n, s)).collect()
    }

    fn layout_with_fan(&self) -> Vec<(String, Vec<usize>, usize)> {
        let group = |prefix: &str, entries: Vec<(String, Vec<usize>, usize)>| {
            let mut v: Vec<_> = entries
                .into_iter()
                .map(|(n, s, f)| (format!("{prefix}.{n}"), s, f))
                .collect();
            v.sort_by(|a, b| a.0.cmp(&b.0));
            v
        };
        let mut out = vec![(
            EMBEDDINGS.to_string(),
            vec![self.config.char_count, self.config.latent_dim],
            0,
        )];
        let mut enc = self.encoder_pre.param_layout();
        enc.extend(self.encoder_post.param_layout());
        out.extend(group("encoder", enc));
        out.extend(group("decoder", self.decoder.param_layout()));
        out.extend(group(
            "hyper",
            self.hypers.iter().flat_map(|h| h.net.param_layout()).collect(),
        ));
        out
    }

    /// Fan-in-scaled uniform initialization; embeddings from `N(0, 1/k)`.
    /// Generated filters start at the scale of a conventionally initialized
    /// transpose convolution.
    pub fn init_params<T: Real, R: Rng + ?Sized>(&self, rng: &mut R) -> ModelParams<T> {
        let k = self.config.latent_dim;
        let emb_dist = Normal::new(0.0, (1.0 / k as f64).sqrt()).unwrap();
        let mut params = ModelParams {
            char_embeddings: Tensor::zeros(&[self.config.char_count, k]),
            encoder: ParamMap::new(),
            decoder: ParamMap::new(),
            hyper: ParamMap::new(),
        };
        for (name, shape, fan) in self.layout_with_fan() {
            let n: usize = shape.iter().product();
            let data: Vec<T> = if name == EMBEDDINGS {
                (0..n).map(|_| T::from_f64(emb_dist.sample(rng))).collect()
            } else if name.ends_with(".scale") {
                vec![T::one(); n]
            } else if name.ends_with(".shift") {
                vec![T::zero(); n]
            } else {
                let mut bound = 1.0 / (fan.max(1) as f64).sqrt();
                if let Some(h) = self.hyper_output_layer(&name) {
                    bound /= ((h.in_ch * KERNEL * KERNEL) as f64).sqrt();
                }
                (0..n).map(|_| T::from_f64(rng.random_range(-bound..=bound))).collect()
            };
            let tensor = Tensor::from_vec(&shape, data);
            let (group, rest) = name.split_once('.').unwrap_or((EMBEDDINGS, ""));
            match group {
                "encoder" => drop(params.encoder.insert(rest.to_string(), tensor)),
                "decoder" => drop(params.decoder.insert(rest.to_string(), tensor)),
                "hyper" => drop(params.hyper.insert(rest.to_string(), tensor)),
                _ => params.char_embeddings = tensor,
            }
        }
        params
    }

    fn hyper_output_layer(&self, qualified: &str) -> Option<&HyperNet> {
        let rest = qualified.strip_prefix("hyper.tconv")?;
        let (idx, tail) = rest.split_once('.')?;
        // hidden linear is layer00, the generating linear is layer02
        if !tail.starts_with("layer02") {
            return None;
        }
        self.hypers.get(idx.parse::<usize>().ok()?)
    }

    /// Checks tensor names and shapes against this architecture.
    pub fn check_params<T: Real>(&self, params: &ModelParams<T>) -> Result<()> {
        let layout = self.param_layout();
        let mut have = params.iter();
        for (name, shape) in &layout {
            match have.next() {
                Some((n, t)) if &n == name && &t.shape == shape => {}
                Some((n, t)) if &n == name => {
                    return Err(Error::param(format!(
                        "tensor {name} has shape {:?}, expected {shape:?}",
                        t.shape
                    )))
                }
                _ => return Err(Error::param(format!("tensor {name} is missing or out of order"))),
            }
        }
        if let Some((n, _)) = have.next() {
            return Err(Error::param(format!("unexpected tensor {n}")));
        }
        Ok(())
    }

    fn check_latent<T: Real>(&self, z: &[T]) -> Result<()> {
        if z.len() != self.config.latent_dim {
            return Err(Error::param(format!(
                "latent has {} dimensions, model expects {}",
                z.len(),
                self.config.latent_dim
            )));
        }
        Ok(())
    }

    fn check_char(&self, ch: usize) -> Result<()> {
        if ch >= self.config.char_count {
            return Err(Error::param(format!(
                "character index {ch} out of range 0..{}",
                self.config.char_count
            )));
        }
        Ok(())
    }

    /// Filters for one transpose convolution generated from `z`:
    /// kernel `[in][out][5][5]` and bias `[out]`.
    pub fn hyper_filters<T: Real>(
        &self,
        params: &ModelParams<T>,
        z: &FontLatent<T>,
        layer_index: usize,
    ) -> Result<(Tensor<T>, Tensor<T>)> {
        self.check_latent(&z.z)?;
        let h = self.hypers.get(layer_index).ok_or_else(|| {
            Error::param(format!(
                "transpose-convolution layer {layer_index} out of range 0..{}",
                self.hypers.len()
            ))
        })?;
        let (k, _) = self.generate(h, params, &z.z);
        Ok((
            Tensor::from_vec(&[h.in_ch, h.out_ch, KERNEL, KERNEL], k.weight),
            Tensor::from_vec(&[h.out_ch], k.bias),
        ))
    }

    fn generate<T: Real>(&self, h: &HyperNet, params: &ModelParams<T>, z: &[T]) -> (TKernel<T>, Vec<Cache<T>>) {
        let (mut out, caches) = h.net.forward(&params.hyper, z.to_vec(), &[]);
        let bias = out.split_off(h.kernel_len());
        (TKernel { weight: out, bias }, caches)
    }

    fn font_kernels<T: Real>(&self, params: &ModelParams<T>, z: &[T]) -> (Vec<TKernel<T>>, Vec<Vec<Cache<T>>>) {
        self.hypers.iter().map(|h| self.generate(h, params, z)).unzip()
    }

    fn decoder_input<T: Real>(&self, params: &ModelParams<T>, z: &[T], ch: usize) -> Vec<T> {
        match self.config.arch {
            Arch::Conv => params.embedding(ch).to_vec(),
            Arch::Fc => z.iter().chain(params.embedding(ch)).copied().collect(),
        }
    }

    /// Raw location-parameter grid (row-major `g × g`) for one character.
    pub fn decode<T: Real>(&self, params: &ModelParams<T>, z: &FontLatent<T>, ch: usize) -> Result<Vec<T>> {
        Ok(self.decode_font(params, z, &[ch])?.pop().unwrap())
    }

    /// Decodes several characters sharing one latent; filters are generated once.
    pub fn decode_font<T: Real>(
        &self,
        params: &ModelParams<T>,
        z: &FontLatent<T>,
        chars: &[usize],
    ) -> Result<Vec<Vec<T>>> {
        self.check_latent(&z.z)?;
        for &ch in chars {
            self.check_char(ch)?;
        }
        let (kernels, _) = self.font_kernels(params, &z.z);
        Ok(chars
            .iter()
            .map(|&ch| self.decoder.forward(&params.decoder, self.decoder_input(params, &z.z, ch), &kernels).0)
            .collect())
    }

    /// Sum over `targets` of the Cauchy log-likelihood of each target glyph
    /// (given as DCT coefficients) under `decode(z, ch)`. Gradients of that sum
    /// are accumulated into `grads` and `grad_z`.
    pub fn reconstruction_grad<T: Real>(
        &self,
        params: &ModelParams<T>,
        z: &[T],
        targets: &[(usize, &[T])],
        plan: &Dct2<T>,
        grads: &mut ModelParams<T>,
        grad_z: &mut [T],
    ) -> f64 {
        let k = self.config.latent_dim;
        let (kernels, hyper_caches) = self.font_kernels(params, z);
        let mut kernel_grads: Vec<TKernel<T>> = kernels.iter().map(TKernel::zeros_like).collect();
        let mut total = 0.0;
        for &(ch, coeffs) in targets {
            let (out, caches) = self.decoder.forward(&params.decoder, self.decoder_input(params, z, ch), &kernels);
            let (ll, grad_out) = plan.cauchy_with_grad(coeffs, &out, self.config.gamma);
            total += ll;
            let grad_in = self.decoder.backward(
                &params.decoder,
                &caches,
                grad_out,
                &kernels,
                &mut grads.decoder,
                &mut kernel_grads,
            );
            let (gz, ge) = match self.config.arch {
                Arch::Conv => (&[][..], &grad_in[..]),
                Arch::Fc => grad_in.split_at(k),
            };
            for (a, &b) in grad_z.iter_mut().zip(gz) {
                *a = *a + b;
            }
            for (a, &b) in grads.embedding_mut(ch).iter_mut().zip(ge) {
                *a = *a + b;
            }
        }
        for ((h, caches), kg) in self.hypers.iter().zip(&hyper_caches).zip(kernel_grads) {
            let mut g = kg.weight;
            g.extend(kg.bias);
            let gz = h.net.backward(&params.hyper, caches, g, &[], &mut grads.hyper, &mut []);
            for (a, &b) in grad_z.iter_mut().zip(&gz) {
                *a = *a + b;
            }
        }
        total
    }

    fn encoder_input<T: Real>(&self, params: &ModelParams<T>, ch: usize, glyph: &[T]) -> Vec<T> {
        let e = params.embedding(ch);
        match self.config.arch {
            Arch::Conv => {
                let n = glyph.len();
                let mut v = Vec::with_capacity(n * (1 + e.len()));
                v.extend_from_slice(glyph);
                for &val in e {
                    v.extend(std::iter::repeat_n(val, n));
                }
                v
            }
            Arch::Fc => glyph.iter().chain(e).copied().collect(),
        }
    }

    /// Approximate posterior from the observed `(character, glyph)` pairs.
    pub fn encode<T: Real>(&self, params: &ModelParams<T>, observed: &[(usize, &[T])]) -> Result<FontPosterior<T>> {
        Ok(self.encode_with_tape(params, observed)?.0)
    }

    /// [`FontModel::encode`] on the glyphs of one font (`char_count` glyphs,
    /// contiguous) selected by `mask`.
    pub fn encode_masked<T: Real>(
        &self,
        params: &ModelParams<T>,
        font: &[T],
        mask: &ObservationMask,
    ) -> Result<FontPosterior<T>> {
        let n = self.glyph_pixels();
        if mask.len() != self.config.char_count || font.len() != n * self.config.char_count {
            return Err(Error::param("font or mask does not match the model's character set"));
        }
        let observed: Vec<(usize, &[T])> = mask
            .observed_indices()
            .into_iter()
            .map(|i| (i, &font[i * n..(i + 1) * n]))
            .collect();
        self.encode(params, &observed)
    }

    pub fn encode_with_tape<T: Real>(
        &self,
        params: &ModelParams<T>,
        observed: &[(usize, &[T])],
    ) -> Result<(FontPosterior<T>, EncodeTape<T>)> {
        if observed.is_empty() {
            return Err(Error::param("encoder needs at least one observed glyph"));
        }
        let n = self.glyph_pixels();
        for &(ch, glyph) in observed {
            self.check_char(ch)?;
            if glyph.len() != n {
                return Err(Error::param(format!("glyph has {} pixels, model expects {n}", glyph.len())));
            }
        }
        let mut pooled: Vec<T> = Vec::new();
        let mut winners: Vec<usize> = Vec::new();
        let mut pre = Vec::with_capacity(observed.len());
        for (g, &(ch, glyph)) in observed.iter().enumerate() {
            let (feat, caches) = self
                .encoder_pre
                .forward(&params.encoder, self.encoder_input(params, ch, glyph), &[]);
            if g == 0 {
                winners = vec![0; feat.len()];
                pooled = feat;
            } else {
                for (u, &v) in feat.iter().enumerate() {
                    if v > pooled[u] {
                        pooled[u] = v;
                        winners[u] = g;
                    }
                }
            }
            pre.push(caches);
        }
        let (out, post) = self.encoder_post.forward(&params.encoder, pooled, &[]);
        let k = self.config.latent_dim;
        let mean = out[..k].to_vec();
        let raw_log_var = out[k..2 * k].to_vec();
        let posterior = FontPosterior::new(mean, raw_log_var.clone());
        Ok((
            posterior,
            EncodeTape {
                chars: observed.iter().map(|o| o.0).collect(),
                pre,
                winners,
                post,
                raw_log_var,
            },
        ))
    }

    /// Backpropagates gradients with respect to the posterior parameters
    /// (after clamping) into the encoder weights and character embeddings.
    pub fn encode_backward<T: Real>(
        &self,
        params: &ModelParams<T>,
        tape: &EncodeTape<T>,
        grad_mean: &[T],
        grad_log_var: &[T],
        grads: &mut ModelParams<T>,
    ) {
        let lim = LOG_VAR_LIMIT;
        let mut g_out: Vec<T> = grad_mean.to_vec();
        g_out.extend(grad_log_var.iter().zip(&tape.raw_log_var).map(|(&g, &raw)| {
            if raw.as_f64().abs() > lim {
                T::zero()
            } else {
                g
            }
        }));
        let g_pooled = self
            .encoder_post
            .backward(&params.encoder, &tape.post, g_out, &[], &mut grads.encoder, &mut []);
        let n = self.glyph_pixels();
        for (g, caches) in tape.pre.iter().enumerate() {
            let mut g_feat = vec![T::zero(); g_pooled.len()];
            let mut any = false;
            for (u, &w) in tape.winners.iter().enumerate() {
                if w == g {
                    g_feat[u] = g_pooled[u];
                    any = true;
                }
            }
            if !any {
                continue;
            }
            let g_in = self
                .encoder_pre
                .backward(&params.encoder, caches, g_feat, &[], &mut grads.encoder, &mut []);
            let ch = tape.chars[g];
            let ge = grads.embedding_mut(ch);
            match self.config.arch {
                Arch::Conv => {
                    for (d, slot) in ge.iter_mut().enumerate() {
                        let s: T = g_in[(1 + d) * n..(2 + d) * n].iter().copied().sum();
                        *slot = *slot + s;
                    }
                }
                Arch::Fc => {
                    for (slot, &v) in ge.iter_mut().zip(&g_in[n..]) {
                        *slot = *slot + v;
                    }
                }
            }
        }
    }
}
