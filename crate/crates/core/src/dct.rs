//! Orthonormal 2-D DCT-II, the Cauchy likelihood on DCT coefficients, and the
//! squared-L2 glyph distance used for evaluation and nearest-neighbor search.
//!
//! The transform is two passes of a precomputed orthonormal basis matrix:
//! `F = B_h · X · B_wᵀ`. Because the basis is orthogonal the inverse is the
//! transpose, and the gradient of any function of `F` with respect to `X` is
//! the inverse transform of its gradient with respect to `F`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tensor::Real;

pub const DEFAULT_GAMMA: f64 = 0.001;

/// Coefficients of a 2-D DCT-II, row-major `[height][width]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientGrid {
    pub height: usize,
    pub width: usize,
    pub coeffs: Vec<f64>,
}

impl CoefficientGrid {
    pub fn zeros(height: usize, width: usize) -> Self {
        CoefficientGrid {
            height,
            width,
            coeffs: vec![0.0; height * width],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.coeffs[row * self.width + col]
    }
}

/// Scale of the Cauchy distribution placed on each DCT coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CauchyScale(f64);

impl CauchyScale {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 0.0 {
            Ok(CauchyScale(gamma))
        } else {
            Err(Error::param(format!("Cauchy scale must be positive, got {gamma}")))
        }
    }

    pub fn gamma(self) -> f64 {
        self.0
    }
}

impl Default for CauchyScale {
    fn default() -> Self {
        CauchyScale(DEFAULT_GAMMA)
    }
}

/// Row `k` holds `alpha_k · cos(pi · (2n + 1) · k / 2N)` for `n = 0..N`.
fn basis_matrix(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n * n];
    let nf = n as f64;
    for k in 0..n {
        let alpha = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for i in 0..n {
            b[k * n + i] = alpha * (PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos();
        }
    }
    b
}

/// Precomputed separable transform for one image shape.
#[derive(Clone, Debug)]
pub struct Dct2<T> {
    height: usize,
    width: usize,
    row_basis: Vec<T>,
    col_basis: Vec<T>,
}

impl<T: Real> Dct2<T> {
    pub fn new(height: usize, width: usize) -> Self {
        assert!(height >= 1 && width >= 1, "DCT needs a non-empty image");
        let cast = |v: Vec<f64>| v.into_iter().map(T::from_f64).collect();
        Dct2 {
            height,
            width,
            row_basis: cast(basis_matrix(height)),
            col_basis: cast(basis_matrix(width)),
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn forward(&self, image: &[T]) -> Vec<T> {
        let (h, w) = (self.height, self.width);
        assert_eq!(image.len(), h * w);
        // tmp = X · B_wᵀ
        let mut tmp = vec![T::zero(); h * w];
        for r in 0..h {
            let row = &image[r * w..(r + 1) * w];
            for k in 0..w {
                let basis = &self.col_basis[k * w..(k + 1) * w];
                tmp[r * w + k] = dot(row, basis);
            }
        }
        // out = B_h · tmp
        let mut out = vec![T::zero(); h * w];
        for k in 0..h {
            let dst = &mut out[k * w..(k + 1) * w];
            for r in 0..h {
                axpy(self.row_basis[k * h + r], &tmp[r * w..(r + 1) * w], dst);
            }
        }
        out
    }

    pub fn inverse(&self, coeffs: &[T]) -> Vec<T> {
        let (h, w) = (self.height, self.width);
        assert_eq!(coeffs.len(), h * w);
        // tmp = C · B_w
        let mut tmp = vec![T::zero(); h * w];
        for r in 0..h {
            let dst = &mut tmp[r * w..(r + 1) * w];
            for k in 0..w {
                axpy(coeffs[r * w + k], &self.col_basis[k * w..(k + 1) * w], dst);
            }
        }
        // out = B_hᵀ · tmp
        let mut out = vec![T::zero(); h * w];
        for k in 0..h {
            let src = &tmp[k * w..(k + 1) * w];
            for n in 0..h {
                axpy(self.row_basis[k * h + n], src, &mut out[n * w..(n + 1) * w]);
            }
        }
        out
    }

    /// Cauchy log-likelihood of a target (given by its coefficients) under the
    /// location grid `x_hat`, together with its gradient with respect to `x_hat`.
    pub fn cauchy_with_grad(&self, target_coeffs: &[T], x_hat: &[T], gamma: f64) -> (f64, Vec<T>) {
        let pred = self.forward(x_hat);
        let g2 = gamma * gamma;
        let norm = -(PI * gamma).ln();
        let mut ll = 0.0;
        let mut dcoef = vec![T::zero(); pred.len()];
        for ((d, &t), &p) in dcoef.iter_mut().zip(target_coeffs).zip(&pred) {
            let r = (t - p).as_f64();
            ll += norm - (r * r / g2).ln_1p();
            // d/dp of -ln(1 + r²/γ²) with r = t - p
            *d = T::from_f64(2.0 * r / (g2 + r * r));
        }
        (ll, self.inverse(&dcoef))
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("{what} contains non-finite values")))
    }
}

fn check_shape(len: usize, height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::param("image dimensions must be at least 1"));
    }
    if len != height * width {
        return Err(Error::param(format!(
            "buffer of {len} values does not match {height}x{width}"
        )));
    }
    Ok(())
}

/// Orthonormal 2-D DCT-II of a row-major `height × width` image.
pub fn dct2(image: &[f64], height: usize, width: usize) -> Result<CoefficientGrid> {
    check_shape(image.len(), height, width)?;
    check_finite(image, "image")?;
    Ok(CoefficientGrid {
        height,
        width,
        coeffs: Dct2::<f64>::new(height, width).forward(image),
    })
}

/// Inverse of [`dct2`]; `height`/`width` must match the coefficient grid.
pub fn idct2(grid: &CoefficientGrid, height: usize, width: usize) -> Result<Vec<f64>> {
    if grid.height != height || grid.width != width {
        return Err(Error::param(format!(
            "coefficient grid is {}x{}, requested {height}x{width}",
            grid.height, grid.width
        )));
    }
    check_shape(grid.coeffs.len(), height, width)?;
    check_finite(&grid.coeffs, "coefficients")?;
    Ok(Dct2::<f64>::new(height, width).inverse(&grid.coeffs))
}

/// `Σ_coeffs [ -ln(πγ) - ln(1 + ((f(x) - f(x̂)) / γ)²) ]`.
pub fn cauchy_log_likelihood(
    x: &[f64],
    x_hat: &[f64],
    height: usize,
    width: usize,
    gamma: CauchyScale,
) -> Result<f64> {
    check_shape(x.len(), height, width)?;
    check_shape(x_hat.len(), height, width)?;
    check_finite(x, "observation")?;
    check_finite(x_hat, "location grid")?;
    let plan = Dct2::<f64>::new(height, width);
    let target = plan.forward(x);
    let pred = plan.forward(x_hat);
    let g = gamma.gamma();
    let norm = -(PI * g).ln();
    Ok(target
        .iter()
        .zip(&pred)
        .map(|(t, p)| {
            let r = (t - p) / g;
            norm - (r * r).ln_1p()
        })
        .sum())
}

/// Sum of squared pixel differences between two equally shaped glyphs.
pub fn squared_l2_glyph_distance<T: Real>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::param(format!(
            "glyph sizes differ: {} vs {} pixels",
            a.len(),
            b.len()
        )));
    }
    Ok(sq_dist(a, b))
}

#[inline]
pub(crate) fn sq_dist<T: Real>(a: &[T], b: &[T]) -> f64 {
    let mut acc = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let d = x.as_f64() - y.as_f64();
        acc += d * d;
    }
    acc
}
