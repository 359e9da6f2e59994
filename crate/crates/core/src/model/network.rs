//! A small interpreter that runs an architecture string forward and backward.

use std::collections::BTreeMap;

use super::config::{LayerSpec, KERNEL, PADDING};
use super::layers::*;
use crate::tensor::{Real, Tensor};

pub type ParamMap<T> = BTreeMap<String, Tensor<T>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActShape {
    Vector(usize),
    Map { c: usize, h: usize, w: usize },
}

impl ActShape {
    pub fn len(self) -> usize {
        match self {
            ActShape::Vector(n) => n,
            ActShape::Map { c, h, w } => c * h * w,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    fn map(self) -> (usize, usize, usize) {
        match self {
            ActShape::Map { c, h, w } => (c, h, w),
            ActShape::Vector(n) => panic!("layer expects a feature map, got a vector of {n}"),
        }
    }
}

/// Filters for one transpose convolution, `[in][out][k][k]` plus `[out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TKernel<T> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> TKernel<T> {
    pub fn zeros_like(&self) -> Self {
        TKernel {
            weight: vec![T::zero(); self.weight.len()],
            bias: vec![T::zero(); self.bias.len()],
        }
    }
}

#[derive(Clone, Debug)]
enum Names {
    None,
    Affine { weight: String, bias: String },
    Norm { scale: String, shift: String },
    Generated(usize),
}

/// Saved state for one layer's backward pass.
#[derive(Clone, Debug)]
pub enum Cache<T> {
    Input(Vec<T>),
    Output(Vec<T>),
    Norm { xhat: Vec<T>, inv_std: Vec<T> },
    Pool(Vec<u32>),
    Nothing,
}

#[derive(Clone, Debug)]
pub struct Network {
    layers: Vec<LayerSpec>,
    shapes: Vec<ActShape>,
    names: Vec<Names>,
    eps: f64,
}

impl Network {
    /// Infers every intermediate shape. Parameter names are
    /// `{prefix}layerNN.{weight,bias,scale,shift}` with `NN = first_index + position`.
    /// `BatchMax` is not allowed inside a network; split the string around it.
    pub fn new(layers: &[LayerSpec], input: ActShape, prefix: &str, first_index: usize, eps: f64) -> Self {
        let mut shapes = vec![input];
        let mut names = Vec::with_capacity(layers.len());
        let mut generated = 0;
        for (pos, layer) in layers.iter().enumerate() {
            let cur = *shapes.last().unwrap();
            let tag = format!("{prefix}layer{:02}", first_index + pos);
            let (next, name) = match *layer {
                LayerSpec::Linear(n) => (
                    ActShape::Vector(n),
                    Names::Affine {
                        weight: format!("{tag}.weight"),
                        bias: format!("{tag}.bias"),
                    },
                ),
                LayerSpec::Relu => (cur, Names::None),
                LayerSpec::SpatialMax => {
                    let (c, h, w) = cur.map();
                    (ActShape::Map { c, h: h / 2, w: w / 2 }, Names::None)
                }
                LayerSpec::Conv(n) => {
                    let (_, h, w) = cur.map();
                    (
                        ActShape::Map { c: n, h, w },
                        Names::Affine {
                            weight: format!("{tag}.weight"),
                            bias: format!("{tag}.bias"),
                        },
                    )
                }
                LayerSpec::InstanceNorm => {
                    cur.map();
                    (
                        cur,
                        Names::Norm {
                            scale: format!("{tag}.scale"),
                            shift: format!("{tag}.shift"),
                        },
                    )
                }
                LayerSpec::TransposeConv {
                    filters,
                    stride,
                    output_padding,
                } => {
                    let (_, h, w) = cur.map();
                    let g = generated;
                    generated += 1;
                    (
                        ActShape::Map {
                            c: filters,
                            h: transpose_out_len(h, stride, PADDING, KERNEL, output_padding),
                            w: transpose_out_len(w, stride, PADDING, KERNEL, output_padding),
                        },
                        Names::Generated(g),
                    )
                }
                LayerSpec::Reshape { channels, side } => {
                    assert_eq!(cur.len(), channels * side * side, "reshape size mismatch");
                    (
                        ActShape::Map {
                            c: channels,
                            h: side,
                            w: side,
                        },
                        Names::None,
                    )
                }
                LayerSpec::BatchMax => panic!("batch max must sit between two networks"),
            };
            shapes.push(next);
            names.push(name);
        }
        Network {
            layers: layers.to_vec(),
            shapes,
            names,
            eps,
        }
    }

    pub fn input_shape(&self) -> ActShape {
        self.shapes[0]
    }

    pub fn output_shape(&self) -> ActShape {
        *self.shapes.last().unwrap()
    }

    pub fn shapes(&self) -> &[ActShape] {
        &self.shapes
    }

    /// `(in_channels, out_channels)` of each transpose convolution, in order.
    pub fn generated_filters(&self) -> Vec<(usize, usize)> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::TransposeConv { .. }))
            .map(|(i, _)| (self.shapes[i].map().0, self.shapes[i + 1].map().0))
            .collect()
    }

    /// Names, shapes and fan-ins of every learned tensor.
    pub fn param_layout(&self) -> Vec<(String, Vec<usize>, usize)> {
        let mut out = Vec::new();
        for (i, (layer, names)) in self.layers.iter().zip(&self.names).enumerate() {
            let (inp, outp) = (self.shapes[i], self.shapes[i + 1]);
            match (layer, names) {
                (LayerSpec::Linear(n), Names::Affine { weight, bias }) => {
                    out.push((weight.clone(), vec![*n, inp.len()], inp.len()));
                    out.push((bias.clone(), vec![*n], inp.len()));
                }
                (LayerSpec::Conv(n), Names::Affine { weight, bias }) => {
                    let ci = inp.map().0;
                    let fan = ci * KERNEL * KERNEL;
                    out.push((weight.clone(), vec![*n, ci, KERNEL, KERNEL], fan));
                    out.push((bias.clone(), vec![*n], fan));
                }
                (LayerSpec::InstanceNorm, Names::Norm { scale, shift }) => {
                    let c = outp.map().0;
                    out.push((scale.clone(), vec![c], 0));
                    out.push((shift.clone(), vec![c], 0));
                }
                _ => {}
            }
        }
        out
    }

    pub fn forward<T: Real>(
        &self,
        params: &ParamMap<T>,
        input: Vec<T>,
        kernels: &[TKernel<T>],
    ) -> (Vec<T>, Vec<Cache<T>>) {
        assert_eq!(input.len(), self.shapes[0].len(), "network input size");
        let mut x = input;
        let mut caches = Vec::with_capacity(self.layers.len());
        for (i, (layer, names)) in self.layers.iter().zip(&self.names).enumerate() {
            let (inp, outp) = (self.shapes[i], self.shapes[i + 1]);
            match (layer, names) {
                (LayerSpec::Linear(_), Names::Affine { weight, bias }) => {
                    let y = linear_forward(&params[weight].data, &params[bias].data, &x);
                    caches.push(Cache::Input(std::mem::replace(&mut x, y)));
                }
                (LayerSpec::Relu, _) => {
                    relu_forward(&mut x);
                    caches.push(Cache::Output(x.clone()));
                }
                (LayerSpec::SpatialMax, _) => {
                    let (c, h, w) = inp.map();
                    let (y, arg) = max_pool2_forward(&x, c, h, w);
                    x = y;
                    caches.push(Cache::Pool(arg));
                }
                (LayerSpec::Conv(n), Names::Affine { weight, bias }) => {
                    let (ci, h, w) = inp.map();
                    let y = conv2d_forward(
                        &x,
                        ci,
                        h,
                        w,
                        &params[weight].data,
                        &params[bias].data,
                        *n,
                        KERNEL,
                        PADDING,
                    );
                    caches.push(Cache::Input(std::mem::replace(&mut x, y)));
                }
                (LayerSpec::InstanceNorm, Names::Norm { scale, shift }) => {
                    let (c, _, _) = inp.map();
                    let (y, xhat, inv_std) =
                        instance_norm_forward(&x, c, &params[scale].data, &params[shift].data, self.eps);
                    x = y;
                    caches.push(Cache::Norm { xhat, inv_std });
                }
                (LayerSpec::TransposeConv { stride, .. }, Names::Generated(g)) => {
                    let geom = transpose_geom(inp, outp, *stride);
                    let k = &kernels[*g];
                    let y = conv_transpose2d_forward(&x, &k.weight, &k.bias, &geom);
                    caches.push(Cache::Input(std::mem::replace(&mut x, y)));
                }
                (LayerSpec::Reshape { .. }, _) => caches.push(Cache::Nothing),
                _ => unreachable!("layer/name mismatch"),
            }
        }
        (x, caches)
    }

    /// Propagates `grad` from the output back to the input, accumulating
    /// parameter gradients into `grads` and generated-filter gradients into
    /// `kernel_grads`.
    pub fn backward<T: Real>(
        &self,
        params: &ParamMap<T>,
        caches: &[Cache<T>],
        grad: Vec<T>,
        kernels: &[TKernel<T>],
        grads: &mut ParamMap<T>,
        kernel_grads: &mut [TKernel<T>],
    ) -> Vec<T> {
        let mut g = grad;
        for i in (0..self.layers.len()).rev() {
            let (inp, outp) = (self.shapes[i], self.shapes[i + 1]);
            match (&self.layers[i], &self.names[i], &caches[i]) {
                (LayerSpec::Linear(_), Names::Affine { weight, bias }, Cache::Input(x)) => {
                    let (gw, gb) = two_mut(grads, weight, bias);
                    g = linear_backward(&params[weight].data, x, &g, gw, gb);
                }
                (LayerSpec::Relu, _, Cache::Output(y)) => relu_backward(y, &mut g),
                (LayerSpec::SpatialMax, _, Cache::Pool(arg)) => {
                    g = max_pool2_backward(arg, inp.len(), &g);
                }
                (LayerSpec::Conv(n), Names::Affine { weight, bias }, Cache::Input(x)) => {
                    let (ci, h, w) = inp.map();
                    let (gw, gb) = two_mut(grads, weight, bias);
                    g = conv2d_backward(x, ci, h, w, &params[weight].data, *n, KERNEL, PADDING, &g, gw, gb);
                }
                (LayerSpec::InstanceNorm, Names::Norm { scale, shift }, Cache::Norm { xhat, inv_std }) => {
                    let (gs, gt) = two_mut(grads, scale, shift);
                    g = instance_norm_backward(xhat, inv_std, &params[scale].data, &g, gs, gt);
                }
                (LayerSpec::TransposeConv { stride, .. }, Names::Generated(idx), Cache::Input(x)) => {
                    let geom = transpose_geom(inp, outp, *stride);
                    let kg = &mut kernel_grads[*idx];
                    g = conv_transpose2d_backward(x, &kernels[*idx].weight, &geom, &g, &mut kg.weight, &mut kg.bias);
                }
                (LayerSpec::Reshape { .. }, _, _) => {}
                _ => unreachable!("cache does not match layer"),
            }
        }
        g
    }
}

fn transpose_geom(inp: ActShape, outp: ActShape, stride: usize) -> TransposeGeom {
    let (ci, ih, iw) = inp.map();
    let (co, oh, ow) = outp.map();
    TransposeGeom {
        in_ch: ci,
        out_ch: co,
        in_h: ih,
        in_w: iw,
        out_h: oh,
        out_w: ow,
        k: KERNEL,
        stride,
        pad: PADDING,
    }
}

/// Disjoint mutable borrows of two gradient buffers.
fn two_mut<'a, T>(map: &'a mut ParamMap<T>, a: &str, b: &str) -> (&'a mut [T], &'a mut [T]) {
    assert_ne!(a, b);
    let mut first = None;
    let mut second = None;
    for (k, v) in map.iter_mut() {
        if k == a {
            first = Some(v.data.as_mut_slice());
        } else if k == b {
            second = Some(v.data.as_mut_slice());
        }
    }
    (
        first.unwrap_or_else(|| panic!("missing gradient buffer {a}")),
        second.unwrap_or_else(|| panic!("missing gradient buffer {b}")),
    )
}
