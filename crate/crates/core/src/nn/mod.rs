//! Layer primitives with hand-written forward and backward passes.
//!
//! Every primitive maps `(n, c, h, w)` to `(n, c', h, w)`: convolutions are
//! stride 1 with zero padding `(f - 1) / 2`, so spatial dimensions never change.

mod batchnorm;
mod conv;
mod param;
mod prelu;

pub use batchnorm::{
    batchnorm_backward, batchnorm_forward, BatchNorm, BnCache, BnGrads, BnMode, DEFAULT_EPS,
    DEFAULT_MOMENTUM,
};
pub use conv::{
    conv2d_backward, conv2d_forward, conv2d_transpose_backward, conv2d_transpose_forward,
    ConvGrads, ConvLayer,
};
pub use param::{Param, ParamKind};
pub use prelu::{prelu_backward, prelu_forward, PRelu, PReluGrads, DEFAULT_ALPHA};

use crate::error::Result;
use crate::tensor::Tensor4;

/// Pixel-wise sum. Mismatched shapes are an error; there is no concatenation fallback.
pub fn eltwise_add(a: &Tensor4, b: &Tensor4) -> Result<Tensor4> {
    b.expect_shape(a.shape(), "eltwise_add")?;
    let mut out = a.clone();
    for (o, v) in out.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *o += v;
    }
    Ok(out)
}

/// Both operands receive `grad_out` unchanged.
pub fn eltwise_add_backward(grad_out: &Tensor4) -> (Tensor4, Tensor4) {
    (grad_out.clone(), grad_out.clone())
}
