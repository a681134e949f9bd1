use crate::nn::{Param, ParamKind};

/// SGD with heavy-ball momentum and L2 weight decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sgd {
    pub momentum: f64,
    pub weight_decay: f64,
    /// When false only conv weights are decayed.
    pub decay_all: bool,
}

impl Sgd {
    pub fn step<'a>(&self, params: impl IntoIterator<Item = &'a mut Param>, lr: f64) {
        for p in params {
            let wd = if self.decay_all || p.kind == ParamKind::ConvWeight {
                self.weight_decay
            } else {
                0.0
            };
            update(p, lr, self.momentum, wd);
        }
    }
}

/// For each param: `g = grad + wd * value; buf = momentum * buf + g;
/// value -= lr * buf`, then the gradient is zeroed.
pub fn sgd_step<'a>(
    params: impl IntoIterator<Item = &'a mut Param>,
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) {
    for p in params {
        update(p, lr, momentum, weight_decay);
    }
}

fn update(p: &mut Param, lr: f64, momentum: f64, wd: f64) {
    for ((v, g), b) in p
        .value
        .iter_mut()
        .zip(p.grad.iter_mut())
        .zip(p.momentum_buf.iter_mut())
    {
        let d = *g + wd * *v;
        *b = momentum * *b + d;
        *v -= lr * *b;
        *g = 0.0;
    }
}
