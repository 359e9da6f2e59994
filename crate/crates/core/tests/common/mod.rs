#![allow(dead_code)]

use glyphfactor::dct::Dct2;
use glyphfactor::model::{Arch, FontLatent, FontModel, ModelConfig, ModelParams, Widths};
use glyphfactor::rng::seeded;
use rand::Rng;

pub fn reduced(arch: Arch, glyph_size: usize, latent_dim: usize, char_count: usize, divisor: usize) -> ModelConfig {
    ModelConfig {
        latent_dim,
        char_count,
        glyph_size,
        arch,
        widths: Widths::divided(divisor),
        ..ModelConfig::default()
    }
}

/// 8×8 glyphs, k = 4, every width divided by 32.
pub fn audit_config(arch: Arch, char_count: usize) -> ModelConfig {
    reduced(arch, 8, 4, char_count, 32)
}

pub fn random_glyphs(n: usize, pixels: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    (0..n).map(|_| (0..pixels).map(|_| rng.random::<f64>()).collect()).collect()
}

pub fn random_latent(k: usize, seed: u64) -> FontLatent<f64> {
    let mut rng = seeded(seed);
    FontLatent {
        z: (0..k).map(|_| rng.random_range(-1.5..1.5)).collect(),
    }
}

/// Relative difference with a floor so near-zero gradients compare absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-2)
}

/// Sum of Cauchy log-likelihoods of `targets` under `decode(z, ch)`.
pub fn recon_ll(model: &FontModel, params: &ModelParams<f64>, z: &[f64], targets: &[(usize, Vec<f64>)]) -> f64 {
    let g = model.config().glyph_size;
    let plan = Dct2::<f64>::new(g, g);
    let coeffs: Vec<(usize, Vec<f64>)> = targets.iter().map(|(c, x)| (*c, plan.forward(x))).collect();
    let refs: Vec<(usize, &[f64])> = coeffs.iter().map(|(c, v)| (*c, v.as_slice())).collect();
    let mut grads = params.zeros_like();
    let mut gz = vec![0.0; z.len()];
    model.reconstruction_grad(params, z, &refs, &plan, &mut grads, &mut gz)
}

/// Analytic gradients of [`recon_ll`] with respect to the parameters and z.
pub fn recon_grad(
    model: &FontModel,
    params: &ModelParams<f64>,
    z: &[f64],
    targets: &[(usize, Vec<f64>)],
) -> (f64, ModelParams<f64>, Vec<f64>) {
    let g = model.config().glyph_size;
    let plan = Dct2::<f64>::new(g, g);
    let coeffs: Vec<(usize, Vec<f64>)> = targets.iter().map(|(c, x)| (*c, plan.forward(x))).collect();
    let refs: Vec<(usize, &[f64])> = coeffs.iter().map(|(c, v)| (*c, v.as_slice())).collect();
    let mut grads = params.zeros_like();
    let mut gz = vec![0.0; z.len()];
    let ll = model.reconstruction_grad(params, z, &refs, &plan, &mut grads, &mut gz);
    (ll, grads, gz)
}

/// Indices spread evenly over `0..n`, at most `count` of them.
pub fn spread(n: usize, count: usize) -> Vec<usize> {
    if n <= count {
        return (0..n).collect();
    }
    (0..count).map(|i| i * (n - 1) / (count - 1)).collect()
}

pub fn smoothed(values: &[f64], window: usize) -> Vec<f64> {
    values
        .windows(window.min(values.len()).max(1))
        .map(|w| w.iter().sum::<f64>() / w.len() as f64)
        .collect()
}

pub fn seeded_params(model: &FontModel, seed: u64) -> ModelParams<f64> {
    model.init_params::<f64, _>(&mut seeded(seed))
}
