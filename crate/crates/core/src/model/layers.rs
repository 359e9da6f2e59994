//! Forward and backward kernels for the layer types used by the networks.
//!
//! Feature maps are `[channels][height][width]`, row-major. Backward functions
//! accumulate into parameter-gradient buffers and return the input gradient.

use crate::tensor::Real;

#[inline]
fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `y = W x + b` with `W` stored `[out][in]`.
pub fn linear_forward<T: Real>(weight: &[T], bias: &[T], x: &[T]) -> Vec<T> {
    let n_in = x.len();
    bias.iter()
        .enumerate()
        .map(|(o, &b)| b + dot(&weight[o * n_in..(o + 1) * n_in], x))
        .collect()
}

pub fn linear_backward<T: Real>(
    weight: &[T],
    x: &[T],
    grad_out: &[T],
    grad_weight: &mut [T],
    grad_bias: &mut [T],
) -> Vec<T> {
    let n_in = x.len();
    let mut grad_in = vec![T::zero(); n_in];
    for (o, &g) in grad_out.iter().enumerate() {
        if g == T::zero() {
            continue;
        }
        grad_bias[o] = grad_bias[o] + g;
        axpy(g, x, &mut grad_weight[o * n_in..(o + 1) * n_in]);
        axpy(g, &weight[o * n_in..(o + 1) * n_in], &mut grad_in);
    }
    grad_in
}

pub fn relu_forward<T: Real>(x: &mut [T]) {
    for v in x {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Gradient through a ReLU given its output.
pub fn relu_backward<T: Real>(out: &[T], grad: &mut [T]) {
    for (g, &o) in grad.iter_mut().zip(out) {
        if o <= T::zero() {
            *g = T::zero();
        }
    }
}

/// Range of output columns `x` for which `x + offset` lands inside `0..len`.
#[inline]
fn valid_range(len: usize, offset: isize) -> (usize, usize) {
    let lo = (-offset).max(0) as usize;
    let hi = (len as isize - offset).clamp(0, len as isize) as usize;
    (lo.min(hi), hi)
}

/// Stride-1 "same" convolution; `weight` is `[out][in][k][k]`, padding `pad`.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_forward<T: Real>(
    x: &[T],
    in_ch: usize,
    h: usize,
    w: usize,
    weight: &[T],
    bias: &[T],
    out_ch: usize,
    k: usize,
    pad: usize,
) -> Vec<T> {
    let hw = h * w;
    let mut out = vec![T::zero(); out_ch * hw];
    for co in 0..out_ch {
        let dst = &mut out[co * hw..(co + 1) * hw];
        dst.iter_mut().for_each(|v| *v = bias[co]);
        for ci in 0..in_ch {
            let src = &x[ci * hw..(ci + 1) * hw];
            for ky in 0..k {
                let dy = ky as isize - pad as isize;
                let (y0, y1) = valid_range(h, dy);
                for kx in 0..k {
                    let wv = weight[((co * in_ch + ci) * k + ky) * k + kx];
                    let dx = kx as isize - pad as isize;
                    let (x0, x1) = valid_range(w, dx);
                    if x0 >= x1 {
                        continue;
                    }
                    for y in y0..y1 {
                        let iy = (y as isize + dy) as usize;
                        let ix0 = (x0 as isize + dx) as usize;
                        axpy(
                            wv,
                            &src[iy * w + ix0..iy * w + ix0 + (x1 - x0)],
                            &mut dst[y * w + x0..y * w + x1],
                        );
                    }
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward<T: Real>(
    x: &[T],
    in_ch: usize,
    h: usize,
    w: usize,
    weight: &[T],
    out_ch: usize,
    k: usize,
    pad: usize,
    grad_out: &[T],
    grad_weight: &mut [T],
    grad_bias: &mut [T],
) -> Vec<T> {
    let hw = h * w;
    let mut grad_in = vec![T::zero(); in_ch * hw];
    for co in 0..out_ch {
        let go = &grad_out[co * hw..(co + 1) * hw];
        grad_bias[co] = grad_bias[co] + go.iter().copied().sum::<T>();
        for ci in 0..in_ch {
            let src = &x[ci * hw..(ci + 1) * hw];
            let gin = &mut grad_in[ci * hw..(ci + 1) * hw];
            for ky in 0..k {
                let dy = ky as isize - pad as isize;
                let (y0, y1) = valid_range(h, dy);
                for kx in 0..k {
                    let widx = ((co * in_ch + ci) * k + ky) * k + kx;
                    let wv = weight[widx];
                    let dx = kx as isize - pad as isize;
                    let (x0, x1) = valid_range(w, dx);
                    if x0 >= x1 {
                        continue;
                    }
                    let mut gw = T::zero();
                    for y in y0..y1 {
                        let iy = (y as isize + dy) as usize;
                        let ix0 = (x0 as isize + dx) as usize;
                        let g = &go[y * w + x0..y * w + x1];
                        gw = gw + dot(g, &src[iy * w + ix0..iy * w + ix0 + (x1 - x0)]);
                        axpy(wv, g, &mut gin[iy * w + ix0..iy * w + ix0 + (x1 - x0)]);
                    }
                    grad_weight[widx] = grad_weight[widx] + gw;
                }
            }
        }
    }
    grad_in
}

/// Output side length of a transpose convolution.
pub fn transpose_out_len(input: usize, stride: usize, pad: usize, k: usize, output_padding: usize) -> usize {
    ((input - 1) * stride + k + output_padding).saturating_sub(2 * pad)
}

/// Geometry of one transpose convolution.
#[derive(Clone, Copy, Debug)]
pub struct TransposeGeom {
    pub in_ch: usize,
    pub out_ch: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
}

/// Transpose convolution with `weight` laid out `[in][out][k][k]`: input pixel
/// `(iy, ix)` scatters into output `(iy·s − p + ky, ix·s − p + kx)`.
pub fn conv_transpose2d_forward<T: Real>(x: &[T], weight: &[T], bias: &[T], g: &TransposeGeom) -> Vec<T> {
    let (ihw, ohw) = (g.in_h * g.in_w, g.out_h * g.out_w);
    let mut out = vec![T::zero(); g.out_ch * ohw];
    for co in 0..g.out_ch {
        out[co * ohw..(co + 1) * ohw].iter_mut().for_each(|v| *v = bias[co]);
    }
    for ci in 0..g.in_ch {
        let src = &x[ci * ihw..(ci + 1) * ihw];
        for co in 0..g.out_ch {
            let dst = &mut out[co * ohw..(co + 1) * ohw];
            for ky in 0..g.k {
                for kx in 0..g.k {
                    let wv = weight[((ci * g.out_ch + co) * g.k + ky) * g.k + kx];
                    for iy in 0..g.in_h {
                        let oy = (iy * g.stride + ky) as isize - g.pad as isize;
                        if oy < 0 || oy >= g.out_h as isize {
                            continue;
                        }
                        let orow = oy as usize * g.out_w;
                        for ix in 0..g.in_w {
                            let ox = (ix * g.stride + kx) as isize - g.pad as isize;
                            if ox < 0 || ox >= g.out_w as isize {
                                continue;
                            }
                            let o = &mut dst[orow + ox as usize];
                            *o = *o + wv * src[iy * g.in_w + ix];
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn conv_transpose2d_backward<T: Real>(
    x: &[T],
    weight: &[T],
    g: &TransposeGeom,
    grad_out: &[T],
    grad_weight: &mut [T],
    grad_bias: &mut [T],
) -> Vec<T> {
    let (ihw, ohw) = (g.in_h * g.in_w, g.out_h * g.out_w);
    let mut grad_in = vec![T::zero(); g.in_ch * ihw];
    for co in 0..g.out_ch {
        grad_bias[co] = grad_bias[co] + grad_out[co * ohw..(co + 1) * ohw].iter().copied().sum::<T>();
    }
    for ci in 0..g.in_ch {
        let src = &x[ci * ihw..(ci + 1) * ihw];
        let gin = &mut grad_in[ci * ihw..(ci + 1) * ihw];
        for co in 0..g.out_ch {
            let go = &grad_out[co * ohw..(co + 1) * ohw];
            for ky in 0..g.k {
                for kx in 0..g.k {
                    let widx = ((ci * g.out_ch + co) * g.k + ky) * g.k + kx;
                    let wv = weight[widx];
                    let mut gw = T::zero();
                    for iy in 0..g.in_h {
                        let oy = (iy * g.stride + ky) as isize - g.pad as isize;
                        if oy < 0 || oy >= g.out_h as isize {
                            continue;
                        }
                        let orow = oy as usize * g.out_w;
                        for ix in 0..g.in_w {
                            let ox = (ix * g.stride + kx) as isize - g.pad as isize;
                            if ox < 0 || ox >= g.out_w as isize {
                                continue;
                            }
                            let gv = go[orow + ox as usize];
                            gw = gw + gv * src[iy * g.in_w + ix];
                            let gi = &mut gin[iy * g.in_w + ix];
                            *gi = *gi + wv * gv;
                        }
                    }
                    grad_weight[widx] = grad_weight[widx] + gw;
                }
            }
        }
    }
    grad_in
}

/// Per-channel normalization over the spatial extent, then `scale · x̂ + shift`.
/// Returns `(output, normalized, inverse_std)`.
pub fn instance_norm_forward<T: Real>(
    x: &[T],
    channels: usize,
    scale: &[T],
    shift: &[T],
    eps: f64,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let n = x.len() / channels;
    let nf = n as f64;
    let mut out = vec![T::zero(); x.len()];
    let mut xhat = vec![T::zero(); x.len()];
    let mut inv_std = vec![T::zero(); channels];
    for c in 0..channels {
        let src = &x[c * n..(c + 1) * n];
        let mean = src.iter().map(|v| v.as_f64()).sum::<f64>() / nf;
        let var = src.iter().map(|v| (v.as_f64() - mean).powi(2)).sum::<f64>() / nf;
        let is = 1.0 / (var + eps).sqrt();
        inv_std[c] = T::from_f64(is);
        let (m, is_t) = (T::from_f64(mean), T::from_f64(is));
        for i in 0..n {
            let xh = (src[i] - m) * is_t;
            xhat[c * n + i] = xh;
            out[c * n + i] = xh * scale[c] + shift[c];
        }
    }
    (out, xhat, inv_std)
}

pub fn instance_norm_backward<T: Real>(
    xhat: &[T],
    inv_std: &[T],
    scale: &[T],
    grad_out: &[T],
    grad_scale: &mut [T],
    grad_shift: &mut [T],
) -> Vec<T> {
    let channels = inv_std.len();
    let n = xhat.len() / channels;
    let nt = T::from_f64(n as f64);
    let mut grad_in = vec![T::zero(); xhat.len()];
    for c in 0..channels {
        let xh = &xhat[c * n..(c + 1) * n];
        let go = &grad_out[c * n..(c + 1) * n];
        grad_shift[c] = grad_shift[c] + go.iter().copied().sum::<T>();
        grad_scale[c] = grad_scale[c] + dot(go, xh);
        let sum_g = go.iter().copied().sum::<T>() * scale[c];
        let sum_gx = dot(go, xh) * scale[c];
        let k = inv_std[c] / nt;
        for i in 0..n {
            let gxh = go[i] * scale[c];
            grad_in[c * n + i] = k * (nt * gxh - sum_g - xh[i] * sum_gx);
        }
    }
    grad_in
}

/// 2×2 max pool with stride 2. Returns the pooled map and, for each output,
/// the flat input index that won (first maximum on ties).
pub fn max_pool2_forward<T: Real>(x: &[T], channels: usize, h: usize, w: usize) -> (Vec<T>, Vec<u32>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(channels * oh * ow);
    let mut arg = Vec::with_capacity(channels * oh * ow);
    for c in 0..channels {
        let base = c * h * w;
        for y in 0..oh {
            for xx in 0..ow {
                let mut best = base + 2 * y * w + 2 * xx;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = base + (2 * y + dy) * w + 2 * xx + dx;
                    if x[idx] > x[best] {
                        best = idx;
                    }
                }
                out.push(x[best]);
                arg.push(best as u32);
            }
        }
    }
    (out, arg)
}

pub fn max_pool2_backward<T: Real>(argmax: &[u32], input_len: usize, grad_out: &[T]) -> Vec<T> {
    let mut grad_in = vec![T::zero(); input_len];
    for (&a, &g) in argmax.iter().zip(grad_out) {
        grad_in[a as usize] = grad_in[a as usize] + g;
    }
    grad_in
}
