use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dct::DEFAULT_GAMMA;
use crate::error::{Error, Result};

pub const DEFAULT_LATENT_DIM: usize = 32;
pub const KERNEL: usize = 5;
pub const PADDING: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Conv,
    Fc,
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::Conv => "conv",
            Arch::Fc => "fc",
        })
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conv" => Ok(Arch::Conv),
            "fc" => Ok(Arch::Fc),
            other => Err(Error::param(format!("unknown architecture {other:?} (expected conv or fc)"))),
        }
    }
}

/// Layer widths. [`Widths::full`] gives the full-size model; reduced models
/// divide every width by a common factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Widths {
    /// Hidden units of the embedding-to-feature-map MLP.
    pub embed_hidden: usize,
    /// Channels of the coarse feature map the embedding is reshaped into.
    pub base_channels: usize,
    /// Filters of the four transpose convolutions (and their blocks).
    pub decoder_channels: [usize; 4],
    pub hyper_hidden: usize,
    pub encoder_channels: [usize; 3],
    /// Width of the per-glyph feature vector that is max-pooled across glyphs.
    pub pooled: usize,
    pub encoder_hidden: usize,
    /// Hidden units of the fully-connected encoder and decoder.
    pub fc_hidden: usize,
}

impl Widths {
    pub fn full() -> Self {
        Widths {
            embed_hidden: 128,
            base_channels: 256,
            decoder_channels: [256, 128, 64, 32],
            hyper_hidden: 128,
            encoder_channels: [64, 128, 256],
            pooled: 1024,
            encoder_hidden: 128,
            fc_hidden: 128,
        }
    }

    pub fn divided(divisor: usize) -> Self {
        let d = |v: usize| (v / divisor.max(1)).max(1);
        let f = Widths::full();
        Widths {
            embed_hidden: d(f.embed_hidden),
            base_channels: d(f.base_channels),
            decoder_channels: f.decoder_channels.map(d),
            hyper_hidden: d(f.hyper_hidden),
            encoder_channels: f.encoder_channels.map(d),
            pooled: d(f.pooled),
            encoder_hidden: d(f.encoder_hidden),
            fc_hidden: d(f.fc_hidden),
        }
    }
}

impl Default for Widths {
    fn default() -> Self {
        Widths::full()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub latent_dim: usize,
    pub char_count: usize,
    pub glyph_size: usize,
    pub arch: Arch,
    pub gamma: f64,
    pub instance_norm_epsilon: f64,
    pub widths: Widths,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            latent_dim: DEFAULT_LATENT_DIM,
            char_count: 26,
            glyph_size: 64,
            arch: Arch::Conv,
            gamma: DEFAULT_GAMMA,
            instance_norm_epsilon: 1e-5,
            widths: Widths::full(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::param("latent dimension must be at least 1"));
        }
        if self.char_count == 0 {
            return Err(Error::param("character count must be at least 1"));
        }
        if self.glyph_size == 0 || (self.arch == Arch::Conv && !self.glyph_size.is_multiple_of(8)) {
            return Err(Error::param(format!(
                "glyph size {} must be a positive multiple of 8 for the convolutional model",
                self.glyph_size
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma must be positive"));
        }
        if !(self.instance_norm_epsilon > 0.0) {
            return Err(Error::param("instance norm epsilon must be positive"));
        }
        Ok(())
    }

    pub fn glyph_pixels(&self) -> usize {
        self.glyph_size * self.glyph_size
    }
}

/// One element of an architecture string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    /// `F_i`
    Linear(usize),
    /// `R`
    Relu,
    /// `M`: elementwise max across the glyphs of a font.
    BatchMax,
    /// `S`: 2×2 spatial max pool, stride 2.
    SpatialMax,
    /// `C_i`: 5×5 convolution, padding 2, stride 1.
    Conv(usize),
    /// `I`
    InstanceNorm,
    /// `T_{i,j,k}`: 5×5 transpose convolution, padding 2, with generated filters.
    TransposeConv {
        filters: usize,
        stride: usize,
        output_padding: usize,
    },
    /// `H`: vector to `[channels][side][side]`.
    Reshape { channels: usize, side: usize },
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Linear(n) => write!(f, "F{n}"),
            LayerSpec::Relu => f.write_str("R"),
            LayerSpec::BatchMax => f.write_str("M"),
            LayerSpec::SpatialMax => f.write_str("S"),
            LayerSpec::Conv(n) => write!(f, "C{n}"),
            LayerSpec::InstanceNorm => f.write_str("I"),
            LayerSpec::TransposeConv {
                filters,
                stride,
                output_padding,
            } => write!(f, "T{filters},{stride},{output_padding}"),
            LayerSpec::Reshape { .. } => f.write_str("H"),
        }
    }
}

pub fn arch_string(layers: &[LayerSpec]) -> String {
    layers.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("-")
}

use LayerSpec::*;

pub fn conv_decoder_layers(cfg: &ModelConfig) -> Vec<LayerSpec> {
    let w = &cfg.widths;
    let side = cfg.glyph_size / 8;
    let [c0, c1, c2, c3] = w.decoder_channels;
    let t = |filters, stride, output_padding| TransposeConv {
        filters,
        stride,
        output_padding,
    };
    vec![
        Linear(w.embed_hidden),
        Relu,
        Linear(w.base_channels * side * side),
        Relu,
        Reshape {
            channels: w.base_channels,
            side,
        },
        t(c0, 2, 1),
        Relu,
        Conv(c0),
        InstanceNorm,
        Relu,
        Conv(c0),
        InstanceNorm,
        Relu,
        t(c1, 2, 1),
        Relu,
        Conv(c1),
        InstanceNorm,
        Relu,
        Conv(c1),
        InstanceNorm,
        Relu,
        t(c2, 2, 1),
        InstanceNorm,
        Relu,
        Conv(c2),
        InstanceNorm,
        Relu,
        Conv(c2),
        InstanceNorm,
        Relu,
        t(c3, 1, 0),
        InstanceNorm,
        Relu,
        Conv(c3),
        InstanceNorm,
        Relu,
        Conv(1),
    ]
}

pub fn conv_encoder_layers(cfg: &ModelConfig) -> Vec<LayerSpec> {
    let w = &cfg.widths;
    let [c0, c1, c2] = w.encoder_channels;
    vec![
        Conv(c0),
        SpatialMax,
        InstanceNorm,
        Relu,
        Conv(c1),
        SpatialMax,
        InstanceNorm,
        Relu,
        Conv(c2),
        SpatialMax,
        InstanceNorm,
        Relu,
        Linear(w.pooled),
        BatchMax,
        Relu,
        Linear(w.encoder_hidden),
        Relu,
        Linear(w.encoder_hidden),
        Relu,
        Linear(w.encoder_hidden),
        Relu,
        Linear(2 * cfg.latent_dim),
    ]
}

pub fn fc_encoder_layers(cfg: &ModelConfig) -> Vec<LayerSpec> {
    let w = &cfg.widths;
    let h = w.fc_hidden;
    vec![
        Linear(h),
        Relu,
        Linear(h),
        Relu,
        Linear(h),
        Relu,
        Linear(w.pooled),
        Relu,
        BatchMax,
        Linear(h),
        Relu,
        Linear(h),
        Relu,
        Linear(h),
        Relu,
        Linear(2 * cfg.latent_dim),
    ]
}

pub fn fc_decoder_layers(cfg: &ModelConfig) -> Vec<LayerSpec> {
    let h = cfg.widths.fc_hidden;
    vec![
        Linear(h),
        Relu,
        Linear(h),
        Relu,
        Linear(h),
        Relu,
        Linear(h),
        Relu,
        Linear(h),
        Relu,
        Linear(cfg.glyph_pixels()),
    ]
}

/// `F_hidden - R - F_j` for a generated parameter block of `j` values.
pub fn hyper_layers(hidden: usize, outputs: usize) -> Vec<LayerSpec> {
    vec![Linear(hidden), Relu, Linear(outputs)]
}
