//! The Gaussian prior and diagonal-Gaussian posterior over font latents.

use std::f64::consts::PI;

use crate::tensor::Real;

pub const LOG_VAR_LIMIT: f64 = 20.0;

#[derive(Clone, Debug, PartialEq)]
pub struct FontLatent<T> {
    pub z: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FontPosterior<T> {
    pub mean: Vec<T>,
    /// Clamped to `[-20, 20]`.
    pub log_var: Vec<T>,
}

impl<T: Real> FontPosterior<T> {
    /// Builds a posterior, clamping the log-variance.
    pub fn new(mean: Vec<T>, log_var: Vec<T>) -> Self {
        assert_eq!(mean.len(), log_var.len());
        let lim = T::from_f64(LOG_VAR_LIMIT);
        FontPosterior {
            mean,
            log_var: log_var.into_iter().map(|v| v.max(-lim).min(lim)).collect(),
        }
    }

    pub fn standard(k: usize) -> Self {
        FontPosterior {
            mean: vec![T::zero(); k],
            log_var: vec![T::zero(); k],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean_latent(&self) -> FontLatent<T> {
        FontLatent { z: self.mean.clone() }
    }
}

/// `z = mean + exp(log_var / 2) ⊙ noise`.
pub fn reparameterize<T: Real>(post: &FontPosterior<T>, noise: &[T]) -> FontLatent<T> {
    assert_eq!(noise.len(), post.dim());
    let half = T::from_f64(0.5);
    FontLatent {
        z: post
            .mean
            .iter()
            .zip(&post.log_var)
            .zip(noise)
            .map(|((&m, &lv), &e)| m + (half * lv).exp() * e)
            .collect(),
    }
}

/// `KL(q || N(0, I)) = ½ Σ (μ² + σ² − 1 − log σ²)`.
pub fn kl_to_standard_normal<T: Real>(post: &FontPosterior<T>) -> f64 {
    post.mean
        .iter()
        .zip(&post.log_var)
        .map(|(&m, &lv)| {
            let (m, lv) = (m.as_f64(), lv.as_f64());
            0.5 * (m * m + lv.exp() - 1.0 - lv)
        })
        .sum()
}

/// Log-density of the standard multivariate normal prior.
pub fn log_prior<T: Real>(z: &FontLatent<T>) -> f64 {
    let k = z.z.len() as f64;
    -0.5 * k * (2.0 * PI).ln() - 0.5 * z.z.iter().map(|v| v.as_f64().powi(2)).sum::<f64>()
}

/// Log-density of the diagonal Gaussian `q` at `z`.
pub fn log_posterior_density<T: Real>(post: &FontPosterior<T>, z: &FontLatent<T>) -> f64 {
    post.mean
        .iter()
        .zip(&post.log_var)
        .zip(&z.z)
        .map(|((&m, &lv), &v)| {
            let (m, lv, v) = (m.as_f64(), lv.as_f64(), v.as_f64());
            -0.5 * ((2.0 * PI).ln() + lv + (v - m).powi(2) / lv.exp())
        })
        .sum()
}
