//! Binary checkpoint: `FVAE`, u32 version, u32 header length, a JSON header
//! (configuration echo, training state, tensor directory), then raw
//! little-endian f32 payloads at the directory's byte offsets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::trainer::TrainConfig;
use crate::error::{Error, Result};
use crate::model::{FontModel, ModelConfig, ModelParams};
use crate::rng::RngState;
use crate::tensor::{Real, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FVAE";
pub const CHECKPOINT_VERSION: u32 = 1;

const PARAMS: &str = "params";
const BEST: &str = "best";
const ADAM_M: &str = "adam.m";
const ADAM_V: &str = "adam.v";

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    pub params: ModelParams<f32>,
    /// Parameters at the best dev evaluation so far.
    pub best_params: Option<ModelParams<f32>>,
    pub adam: AdamState,
    pub rng: RngState,
    pub step: u64,
    pub best_dev: Option<f64>,
    pub evals_since_best: u32,
    pub nonfinite_streak: u32,
    pub finished: bool,
    pub elapsed_secs: f64,
}

impl Checkpoint {
    /// Parameters to use at test time: the early-stopping choice if any.
    pub fn inference_params(&self) -> &ModelParams<f32> {
        self.best_params.as_ref().unwrap_or(&self.params)
    }

    fn groups(&self) -> Vec<(&'static str, &ModelParams<f32>)> {
        let mut g = vec![(PARAMS, &self.params), (ADAM_M, &self.adam.m), (ADAM_V, &self.adam.v)];
        if let Some(b) = &self.best_params {
            g.push((BEST, b));
        }
        g
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut tensors = Vec::new();
        let mut offset = 0u64;
        for (group, params) in self.groups() {
            for (name, t) in params.iter() {
                tensors.push(Entry {
                    name: format!("{group}/{name}"),
                    dtype: f32::DTYPE.to_string(),
                    shape: t.shape.clone(),
                    offset,
                });
                offset += (t.len() * f32::BYTES) as u64;
            }
        }
        let header = Header {
            model_config: self.model_config.clone(),
            train_config: self.train_config.clone(),
            step: self.step,
            adam_step: self.adam.step,
            best_dev: self.best_dev,
            evals_since_best: self.evals_since_best,
            nonfinite_streak: self.nonfinite_streak,
            finished: self.finished,
            elapsed_secs: self.elapsed_secs,
            rng: RngHeader {
                seed: self.rng.seed.iter().map(|b| format!("{b:02x}")).collect(),
                stream: self.rng.stream,
                word_pos: self.rng.word_pos.to_string(),
            },
            tensors,
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Decode(e.to_string()))?;
        let mut out = Vec::with_capacity(12 + json.len() + offset as usize);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, params) in self.groups() {
            for (_, t) in params.iter() {
                for &v in &t.data {
                    v.write_le(&mut out);
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(Error::Decode("not a checkpoint (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::Decode(format!(
                "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
            )));
        }
        let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let json = bytes
            .get(12..12 + hlen)
            .ok_or_else(|| Error::Decode("truncated checkpoint header".into()))?;
        let header: Header = serde_json::from_slice(json).map_err(|e| Error::Decode(format!("bad header: {e}")))?;
        let payload = &bytes[12 + hlen..];

        let model = FontModel::new(header.model_config.clone()).map_err(|e| Error::Decode(e.to_string()))?;
        let layout = model.param_layout();
        let mut dir = header.tensors.iter();
        let mut read_group = |group: &str| -> Result<ModelParams<f32>> {
            let mut tensors = Vec::with_capacity(layout.len());
            for (name, shape) in &layout {
                let full = format!("{group}/{name}");
                let e = dir
                    .next()
                    .filter(|e| e.name == full)
                    .ok_or_else(|| Error::Decode(format!("tensor {full} missing from checkpoint directory")))?;
                if &e.shape != shape {
                    return Err(Error::Decode(format!(
                        "tensor {full} has shape {:?} but the configuration expects {shape:?}",
                        e.shape
                    )));
                }
                if e.dtype != f32::DTYPE {
                    return Err(Error::Decode(format!("tensor {full} has dtype {}, expected f32", e.dtype)));
                }
                let n: usize = shape.iter().product();
                let start = e.offset as usize;
                let raw = payload
                    .get(start..start + n * f32::BYTES)
                    .ok_or_else(|| Error::Decode(format!("tensor {full} extends past the end of the file")))?;
                let data = raw.chunks_exact(f32::BYTES).map(f32::read_le).collect();
                tensors.push((name.clone(), Tensor::from_vec(shape, data)));
            }
            ModelParams::from_named(tensors).ok_or_else(|| Error::Decode(format!("malformed {group} tensors")))
        };
        let params = read_group(PARAMS)?;
        let m = read_group(ADAM_M)?;
        let v = read_group(ADAM_V)?;
        let has_best = header.tensors.len() == 4 * layout.len();
        let best_params = if has_best { Some(read_group(BEST)?) } else { None };
        if dir.next().is_some() {
            return Err(Error::Decode("unexpected extra tensors in checkpoint".into()));
        }
        Ok(Checkpoint {
            model_config: header.model_config,
            train_config: header.train_config,
            params,
            best_params,
            adam: AdamState {
                m,
                v,
                step: header.adam_step,
            },
            rng: header.rng.decode()?,
            step: header.step,
            best_dev: header.best_dev,
            evals_since_best: header.evals_since_best,
            nonfinite_streak: header.nonfinite_streak,
            finished: header.finished,
            elapsed_secs: header.elapsed_secs,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    dtype: String,
    shape: Vec<usize>,
    offset: u64,
}

#[derive(Serialize, Deserialize)]
struct RngHeader {
    seed: String,
    stream: u64,
    word_pos: String,
}

impl RngHeader {
    fn decode(&self) -> Result<RngState> {
        let bad = || Error::Decode("bad rng state in checkpoint header".into());
        if self.seed.len() != 64 {
            return Err(bad());
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        Ok(RngState {
            seed,
            stream: self.stream,
            word_pos: self.word_pos.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    model_config: ModelConfig,
    train_config: TrainConfig,
    step: u64,
    adam_step: u64,
    best_dev: Option<f64>,
    evals_since_best: u32,
    nonfinite_streak: u32,
    finished: bool,
    elapsed_secs: f64,
    rng: RngHeader,
    tensors: Vec<Entry>,
}

/// Writes via a temporary sibling and rename, so a crash never leaves a
/// partial checkpoint under `path`.
pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let bytes = ckpt.to_bytes()?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes).map_err(|e| e.at(path))
}
