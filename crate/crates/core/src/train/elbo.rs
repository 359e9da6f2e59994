use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::ObservationMask;
use crate::dct::Dct2;
use crate::error::{Error, Result};
use crate::model::{kl_to_standard_normal, reparameterize, FontModel, ModelParams};
use crate::tensor::Real;

/// ELBO of one font and its gradient (ascent direction) with respect to
/// every parameter.
#[derive(Clone, Debug)]
pub struct ElboGrad<T> {
    pub elbo: f64,
    pub reconstruction: f64,
    pub kl: f64,
    pub grads: ModelParams<T>,
}

fn observed<'a, T: Real>(model: &FontModel, font: &'a [T], mask: &ObservationMask) -> Result<Vec<(usize, &'a [T])>> {
    let n = model.glyph_pixels();
    let chars = model.config().char_count;
    if font.len() != n * chars || mask.len() != chars {
        return Err(Error::param("font glyphs or mask do not match the model's character set"));
    }
    let obs: Vec<_> = mask
        .observed_indices()
        .into_iter()
        .map(|i| (i, &font[i * n..(i + 1) * n]))
        .collect();
    if obs.is_empty() {
        return Err(Error::param("observation mask is empty"));
    }
    Ok(obs)
}

/// ELBO with explicit reparameterization noise (one vector per Monte Carlo
/// sample). Only masked glyphs reach the encoder; all glyphs are scored.
pub fn elbo_with_noise<T: Real>(
    model: &FontModel,
    params: &ModelParams<T>,
    font: &[T],
    mask: &ObservationMask,
    noises: &[Vec<T>],
    plan: &Dct2<T>,
) -> Result<f64> {
    if noises.is_empty() {
        return Err(Error::param("need at least one Monte Carlo sample"));
    }
    let obs = observed(model, font, mask)?;
    let post = model.encode(params, &obs)?;
    let n = model.glyph_pixels();
    let chars: Vec<usize> = (0..model.config().char_count).collect();
    let gamma = model.config().gamma;
    let targets: Vec<Vec<T>> = chars.iter().map(|&i| plan.forward(&font[i * n..(i + 1) * n])).collect();
    let mut rec = 0.0;
    for noise in noises {
        let z = reparameterize(&post, noise);
        let grids = model.decode_font(params, &z, &chars)?;
        for (grid, target) in grids.iter().zip(&targets) {
            rec += plan.cauchy_with_grad(target, grid, gamma).0;
        }
    }
    Ok(rec / noises.len() as f64 - kl_to_standard_normal(&post))
}

/// Monte Carlo ELBO estimate drawing `mc_samples` noise vectors from `rng`.
pub fn elbo_for_font<T: Real, R: Rng + ?Sized>(
    model: &FontModel,
    params: &ModelParams<T>,
    font: &[T],
    mask: &ObservationMask,
    mc_samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let k = model.latent_dim();
    let noises: Vec<Vec<T>> = (0..mc_samples)
        .map(|_| (0..k).map(|_| T::from_f64(rng.sample(StandardNormal))).collect())
        .collect();
    let plan = Dct2::new(model.config().glyph_size, model.config().glyph_size);
    elbo_with_noise(model, params, font, mask, &noises, &plan)
}

/// ELBO and its exact gradient for fixed noise.
pub fn elbo_grad_for_font<T: Real>(
    model: &FontModel,
    params: &ModelParams<T>,
    font: &[T],
    mask: &ObservationMask,
    noises: &[Vec<T>],
    plan: &Dct2<T>,
) -> Result<ElboGrad<T>> {
    if noises.is_empty() {
        return Err(Error::param("need at least one Monte Carlo sample"));
    }
    let obs = observed(model, font, mask)?;
    let (post, tape) = model.encode_with_tape(params, &obs)?;
    let k = model.latent_dim();
    let n = model.glyph_pixels();
    let coeffs: Vec<Vec<T>> = (0..model.config().char_count)
        .map(|i| plan.forward(&font[i * n..(i + 1) * n]))
        .collect();
    let targets: Vec<(usize, &[T])> = coeffs.iter().enumerate().map(|(i, c)| (i, c.as_slice())).collect();

    let mut grads = params.zeros_like();
    let mut g_mean = vec![0.0f64; k];
    let mut g_log_var = vec![0.0f64; k];
    let mut rec = 0.0;
    let half = T::from_f64(0.5);
    for noise in noises {
        let z = reparameterize(&post, noise);
        let mut gz = vec![T::zero(); k];
        rec += model.reconstruction_grad(params, &z.z, &targets, plan, &mut grads, &mut gz);
        for d in 0..k {
            g_mean[d] += gz[d].as_f64();
            let dz_dlv = half * (half * post.log_var[d]).exp() * noise[d];
            g_log_var[d] += (gz[d] * dz_dlv).as_f64();
        }
    }
    let s = noises.len() as f64;
    grads.scale(T::from_f64(1.0 / s));
    let kl = kl_to_standard_normal(&post);
    let gm: Vec<T> = (0..k)
        .map(|d| T::from_f64(g_mean[d] / s - post.mean[d].as_f64()))
        .collect();
    let glv: Vec<T> = (0..k)
        .map(|d| T::from_f64(g_log_var[d] / s - 0.5 * (post.log_var[d].as_f64().exp() - 1.0)))
        .collect();
    model.encode_backward(params, &tape, &gm, &glv, &mut grads);
    Ok(ElboGrad {
        elbo: rec / s - kl,
        reconstruction: rec / s,
        kl,
        grads,
    })
}
