//! Same-padding, stride-1 2-D convolution and its adjoint.
//!
//! Both layer types share three correlation kernels operating on weights laid
//! out as `(out, in, f, f)`:
//!
//! * [`correlate`] maps `in` channels to `out` channels,
//! * [`correlate_adjoint`] maps `out` channels back to `in` channels,
//! * [`correlate_weight_grad`] is the derivative of `correlate` w.r.t. the weights.
//!
//! A transposed layer stores its weights as `(c_in, n_out, f, f)`, so its
//! forward pass is `correlate_adjoint` and its input gradient is `correlate`.
//!
//! Work is split over `(sample, channel)` planes. Every output element is
//! accumulated in a fixed `(channel, ky, kx)` order, so results are bit-identical
//! whatever the rayon pool size.

use rayon::prelude::*;

use super::param::{Param, ParamKind};
use crate::error::{Error, Result};
use crate::tensor::{Shape4, Tensor4};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    kernel: usize,
    c_in: usize,
    n_out: usize,
    transposed: bool,
    pub weight: Param,
    pub bias: Param,
}

/// Gradients of `Σ grad_out ⊙ forward(input)`.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Tensor4,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    /// A zero-initialised convolution with weights shaped `(n_out, c_in, f, f)`.
    pub fn new(kernel: usize, c_in: usize, n_out: usize) -> Result<Self> {
        Self::build(kernel, c_in, n_out, false)
    }

    /// A zero-initialised transposed convolution with weights shaped `(c_in, n_out, f, f)`.
    pub fn transposed(kernel: usize, c_in: usize, n_out: usize) -> Result<Self> {
        Self::build(kernel, c_in, n_out, true)
    }

    fn build(kernel: usize, c_in: usize, n_out: usize, transposed: bool) -> Result<Self> {
        if kernel.is_multiple_of(2) {
            return Err(Error::Config(format!("kernel size must be odd, got {kernel}")));
        }
        if c_in == 0 || n_out == 0 {
            return Err(Error::Config(format!(
                "conv channels must be >= 1 (c_in={c_in}, n_out={n_out})"
            )));
        }
        let len = c_in
            .checked_mul(n_out)
            .and_then(|v| v.checked_mul(kernel * kernel))
            .ok_or_else(|| Error::Size("conv weight volume overflows".into()))?;
        Ok(Self {
            kernel,
            c_in,
            n_out,
            transposed,
            weight: Param::filled(ParamKind::ConvWeight, len, 0.0),
            bias: Param::filled(ParamKind::ConvBias, n_out, 0.0),
        })
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn padding(&self) -> usize {
        (self.kernel - 1) / 2
    }

    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    /// Fan-in of one output element, used for He initialisation.
    pub fn fan_in(&self) -> usize {
        self.c_in * self.kernel * self.kernel
    }

    /// Weight array shape in storage order.
    pub fn weight_shape(&self) -> (usize, usize, usize, usize) {
        if self.transposed {
            (self.c_in, self.n_out, self.kernel, self.kernel)
        } else {
            (self.n_out, self.c_in, self.kernel, self.kernel)
        }
    }

    fn check_input(&self, input: &Tensor4, transposed: bool) -> Result<()> {
        if self.transposed != transposed {
            return Err(Error::Config(format!(
                "layer is {}a transposed convolution",
                if self.transposed { "" } else { "not " }
            )));
        }
        if input.c() != self.c_in {
            return Err(Error::Config(format!(
                "conv expects {} input channels, got {}",
                self.c_in,
                input.c()
            )));
        }
        Ok(())
    }

    fn output_shape(&self, input: &Tensor4) -> Shape4 {
        Shape4::new(input.n(), self.n_out, input.h(), input.w())
    }
}

pub fn conv2d_forward(input: &Tensor4, layer: &ConvLayer) -> Result<Tensor4> {
    layer.check_input(input, false)?;
    correlate(
        input,
        &layer.weight.value,
        layer.n_out,
        layer.kernel,
        Some(&layer.bias.value),
    )
}

pub fn conv2d_backward(input: &Tensor4, layer: &ConvLayer, grad_out: &Tensor4) -> Result<ConvGrads> {
    layer.check_input(input, false)?;
    grad_out.expect_shape(layer.output_shape(input), "conv2d_backward grad_out")?;
    let k = layer.kernel;
    Ok(ConvGrads {
        input: correlate_adjoint(grad_out, &layer.weight.value, layer.c_in, k)?,
        weight: correlate_weight_grad(input, grad_out, k)?,
        bias: channel_sums(grad_out),
    })
}

pub fn conv2d_transpose_forward(input: &Tensor4, layer: &ConvLayer) -> Result<Tensor4> {
    layer.check_input(input, true)?;
    let mut out = correlate_adjoint(input, &layer.weight.value, layer.n_out, layer.kernel)?;
    add_bias(&mut out, &layer.bias.value);
    Ok(out)
}

pub fn conv2d_transpose_backward(
    input: &Tensor4,
    layer: &ConvLayer,
    grad_out: &Tensor4,
) -> Result<ConvGrads> {
    layer.check_input(input, true)?;
    grad_out.expect_shape(layer.output_shape(input), "conv2d_transpose_backward grad_out")?;
    let k = layer.kernel;
    Ok(ConvGrads {
        input: correlate(grad_out, &layer.weight.value, layer.c_in, k, None)?,
        // <grad_out, A^T x> = <A grad_out, x>, so the roles of the two operands swap.
        weight: correlate_weight_grad(grad_out, input, k)?,
        bias: channel_sums(grad_out),
    })
}

/// Zero-pads every plane by `pad` pixels per side.
fn pad_planes(t: &Tensor4, pad: usize) -> (Vec<f64>, usize, usize) {
    let (h, w) = (t.h(), t.w());
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    if pad == 0 {
        return (t.as_slice().to_vec(), ph, pw);
    }
    let planes = t.n() * t.c();
    let mut out = vec![0.0; planes * ph * pw];
    for (dst, src) in out.chunks_mut(ph * pw).zip(t.as_slice().chunks(h * w)) {
        for y in 0..h {
            let row = (y + pad) * pw + pad;
            dst[row..row + w].copy_from_slice(&src[y * w..(y + 1) * w]);
        }
    }
    (out, ph, pw)
}

/// `out[b,o] = bias[o] + Σ_c Σ_ij w[o,c,i,j] · pad(input)[b,c,y+i,x+j]`.
pub(crate) fn correlate(
    input: &Tensor4,
    weight: &[f64],
    n_out: usize,
    k: usize,
    bias: Option<&[f64]>,
) -> Result<Tensor4> {
    let (n, c_in, h, w) = (input.n(), input.c(), input.h(), input.w());
    check_weight_len(weight, n_out, c_in, k)?;
    let (padded, ph, pw) = pad_planes(input, (k - 1) / 2);
    let mut out = Tensor4::zeros(Shape4::new(n, n_out, h, w))?;
    out.as_mut_slice()
        .par_chunks_mut(h * w)
        .enumerate()
        .for_each(|(idx, plane)| {
            let (b, o) = (idx / n_out, idx % n_out);
            if let Some(bias) = bias {
                plane.iter_mut().for_each(|v| *v = bias[o]);
            }
            for c in 0..c_in {
                let src = &padded[(b * c_in + c) * ph * pw..][..ph * pw];
                let wk = &weight[(o * c_in + c) * k * k..][..k * k];
                for i in 0..k {
                    for j in 0..k {
                        let wv = wk[i * k + j];
                        for y in 0..h {
                            let row = &src[(y + i) * pw + j..][..w];
                            let dst = &mut plane[y * w..(y + 1) * w];
                            for (d, s) in dst.iter_mut().zip(row) {
                                *d += wv * s;
                            }
                        }
                    }
                }
            }
        });
    Ok(out)
}

/// Adjoint of [`correlate`] (without bias): maps `grad` with `n_out` channels
/// back to `c_in` channels.
pub(crate) fn correlate_adjoint(
    grad: &Tensor4,
    weight: &[f64],
    c_in: usize,
    k: usize,
) -> Result<Tensor4> {
    let (n, n_out, h, w) = (grad.n(), grad.c(), grad.h(), grad.w());
    check_weight_len(weight, n_out, c_in, k)?;
    let pad = (k - 1) / 2;
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let mut out = Tensor4::zeros(Shape4::new(n, c_in, h, w))?;
    let g = grad.as_slice();
    out.as_mut_slice()
        .par_chunks_mut(h * w)
        .enumerate()
        .for_each_init(
            || vec![0.0; ph * pw],
            |acc, (idx, plane)| {
                let (b, c) = (idx / c_in, idx % c_in);
                acc.iter_mut().for_each(|v| *v = 0.0);
                for o in 0..n_out {
                    let src = &g[(b * n_out + o) * h * w..][..h * w];
                    let wk = &weight[(o * c_in + c) * k * k..][..k * k];
                    for i in 0..k {
                        for j in 0..k {
                            let wv = wk[i * k + j];
                            for y in 0..h {
                                let dst = &mut acc[(y + i) * pw + j..][..w];
                                for (d, s) in dst.iter_mut().zip(&src[y * w..(y + 1) * w]) {
                                    *d += wv * s;
                                }
                            }
                        }
                    }
                }
                for y in 0..h {
                    plane[y * w..(y + 1) * w]
                        .copy_from_slice(&acc[(y + pad) * pw + pad..][..w]);
                }
            },
        );
    Ok(out)
}

/// `dW[o,c,i,j] = Σ_b Σ_yx grad[b,o,y,x] · pad(input)[b,c,y+i,x+j]`.
pub(crate) fn correlate_weight_grad(input: &Tensor4, grad: &Tensor4, k: usize) -> Result<Vec<f64>> {
    let (n, c_in, h, w) = (input.n(), input.c(), input.h(), input.w());
    let n_out = grad.c();
    grad.expect_shape(Shape4::new(n, n_out, h, w), "weight gradient")?;
    let (padded, ph, pw) = pad_planes(input, (k - 1) / 2);
    let g = grad.as_slice();
    let mut dw = vec![0.0; n_out * c_in * k * k];
    dw.par_chunks_mut(c_in * k * k)
        .enumerate()
        .for_each(|(o, dwo)| {
            for c in 0..c_in {
                for i in 0..k {
                    for j in 0..k {
                        let mut acc = 0.0;
                        for b in 0..n {
                            let src = &padded[(b * c_in + c) * ph * pw..][..ph * pw];
                            let gp = &g[(b * n_out + o) * h * w..][..h * w];
                            for y in 0..h {
                                let row = &src[(y + i) * pw + j..][..w];
                                let grow = &gp[y * w..(y + 1) * w];
                                acc += row.iter().zip(grow).map(|(a, b)| a * b).sum::<f64>();
                            }
                        }
                        dwo[(c * k + i) * k + j] = acc;
                    }
                }
            }
        });
    Ok(dw)
}

fn check_weight_len(weight: &[f64], n_out: usize, c_in: usize, k: usize) -> Result<()> {
    if weight.len() != n_out * c_in * k * k {
        return Err(Error::Shape(format!(
            "weight has {} entries, expected {n_out}x{c_in}x{k}x{k}",
            weight.len()
        )));
    }
    Ok(())
}

fn add_bias(t: &mut Tensor4, bias: &[f64]) {
    let (c, plane) = (t.c(), t.shape().plane());
    for (idx, p) in t.as_mut_slice().chunks_mut(plane).enumerate() {
        let b = bias[idx % c];
        p.iter_mut().for_each(|v| *v += b);
    }
}

pub(crate) fn channel_sums(t: &Tensor4) -> Vec<f64> {
    let (c, plane) = (t.c(), t.shape().plane());
    let mut sums = vec![0.0; c];
    for (idx, p) in t.as_slice().chunks(plane).enumerate() {
        sums[idx % c] += p.iter().sum::<f64>();
    }
    sums
}
