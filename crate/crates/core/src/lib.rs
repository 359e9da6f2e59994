//! Deep factorization of glyph images into character content and font style.
//!
//! A font collection is a matrix of glyph images (fonts × character types).
//! Each character type owns a learned embedding, each font a Gaussian latent
//! style vector. A transpose-convolutional decoder whose upsampling filters are
//! generated from the font latent renders glyphs; a set encoder with an
//! elementwise max across observed glyphs infers the latent from any subset of
//! a font. Training maximizes a variational bound whose reconstruction term is a
//! Cauchy log-likelihood on orthonormal DCT-II coefficients.
//!
//! Module map:
//!
//! - [`data`]: glyph collections, sprite sheets, the packed `GLYF` format,
//!   observation masks and hard-split mining.
//! - [`dct`]: 2-D DCT-II, the projected Cauchy likelihood and the glyph distance.
//! - [`model`]: architecture strings, parameters, encoder, decoder and the
//!   Gaussian latent utilities.
//! - [`train`]: ELBO, Adam, the training loop and checkpoints.
//! - [`reconstruct`]: posterior-mean reconstruction, nearest-neighbor baseline,
//!   interpolation and latent export.
//! - [`kmeans`]: Lloyd's algorithm with k-means++ seeding.
//! - [`eval`]: the reconstruction-error protocol and report rendering.
//! - [`synth`]: procedurally generated fonts for tests and demos.

pub mod data;
pub mod dct;
pub mod error;
pub mod eval;
pub mod kmeans;
pub mod model;
pub mod reconstruct;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod train;
mod par;

pub use error::{Error, Result};
pub use tensor::{Real, Tensor};
