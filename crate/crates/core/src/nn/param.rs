use serde::{Deserialize, Serialize};

/// What a parameter array feeds into. Used by the optimizer to decide
/// which arrays receive weight decay when `decay_all` is off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamKind {
    ConvWeight,
    ConvBias,
    BnGamma,
    BnBeta,
    PreluAlpha,
}

/// A learnable array with its gradient accumulator and momentum buffer.
///
/// `value`, `grad` and `momentum_buf` always have the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub id: usize,
    pub kind: ParamKind,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub momentum_buf: Vec<f64>,
}

impl Param {
    pub fn new(kind: ParamKind, value: Vec<f64>) -> Self {
        let len = value.len();
        Self {
            id: 0,
            kind,
            value,
            grad: vec![0.0; len],
            momentum_buf: vec![0.0; len],
        }
    }

    pub fn filled(kind: ParamKind, len: usize, v: f64) -> Self {
        Self::new(kind, vec![v; len])
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn accumulate(&mut self, grad: &[f64]) {
        debug_assert_eq!(grad.len(), self.grad.len());
        for (g, d) in self.grad.iter_mut().zip(grad) {
            *g += d;
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }
}
