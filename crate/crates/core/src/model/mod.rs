//! The generative model and its inference network.
//!
//! Decoder (conv variant): the character embedding goes through an MLP into a
//! coarse `[C][g/8][g/8]` map, then four blocks, each a transpose convolution
//! followed by two ordinary convolutions. The transpose-convolution filters are
//! not parameters: a small MLP generates them from the font latent. The output
//! is a raw `g × g` grid of Cauchy location parameters.
//!
//! Encoder (conv variant): every observed glyph, with its character embedding
//! tiled as extra channels, runs through three conv/pool blocks and a linear
//! layer; an elementwise max across glyphs gives one vector per font, and an
//! MLP maps it to the posterior mean and log-variance.

mod config;
mod font_model;
pub mod layers;
mod latent;
mod network;
mod params;

pub use config::{
    arch_string, conv_decoder_layers, conv_encoder_layers, fc_decoder_layers, fc_encoder_layers, hyper_layers, Arch,
    LayerSpec, ModelConfig, Widths, DEFAULT_LATENT_DIM, KERNEL, PADDING,
};
pub use font_model::{EncodeTape, FontModel};
pub use latent::{
    kl_to_standard_normal, log_posterior_density, log_prior, reparameterize, FontLatent, FontPosterior, LOG_VAR_LIMIT,
};
pub use network::{ActShape, Cache, Network, ParamMap, TKernel};
pub use params::{ModelParams, EMBEDDINGS};
