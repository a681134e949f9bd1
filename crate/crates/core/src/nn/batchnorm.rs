//! Per-channel batch normalization over `(n, h, w)`.
//!
//! Train mode standardizes with the biased batch variance and folds the batch
//! statistics into the running estimates with
//! `running <- (1 - momentum) * running + momentum * batch`.
//! Infer mode uses the running estimates only.

use serde::{Deserialize, Serialize};

use super::param::{Param, ParamKind};
use crate::error::{Error, Result};
use crate::tensor::Tensor4;

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BnMode {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    channels: usize,
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub eps: f64,
    pub momentum: f64,
    pub mode: BnMode,
}

/// Values saved by the forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct BnCache {
    x_hat: Tensor4,
    inv_std: Vec<f64>,
    mode: BnMode,
}

#[derive(Debug, Clone)]
pub struct BnGrads {
    pub input: Tensor4,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            gamma: Param::filled(ParamKind::BnGamma, channels, 1.0),
            beta: Param::filled(ParamKind::BnBeta, channels, 0.0),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            eps: DEFAULT_EPS,
            momentum: DEFAULT_MOMENTUM,
            mode: BnMode::Train,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }
}

/// Iterates `(channel, plane)` for every plane of `t`.
fn planes(t: &Tensor4) -> impl Iterator<Item = (usize, &[f64])> {
    let c = t.c();
    t.as_slice()
        .chunks(t.shape().plane())
        .enumerate()
        .map(move |(i, p)| (i % c, p))
}

pub fn batchnorm_forward(input: &Tensor4, bn: &mut BatchNorm) -> Result<(Tensor4, BnCache)> {
    let c = bn.channels;
    if input.c() != c {
        return Err(Error::Config(format!(
            "batch norm expects {c} channels, got {}",
            input.c()
        )));
    }
    let count = input.n() * input.shape().plane();
    let (mean, var) = match bn.mode {
        BnMode::Train => {
            if count < 2 {
                return Err(Error::DegenerateBatch { channel: 0 });
            }
            let mut mean = vec![0.0; c];
            for (ch, p) in planes(input) {
                mean[ch] += p.iter().sum::<f64>();
            }
            mean.iter_mut().for_each(|m| *m /= count as f64);
            let mut var = vec![0.0; c];
            for (ch, p) in planes(input) {
                let m = mean[ch];
                var[ch] += p.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
            }
            var.iter_mut().for_each(|v| *v /= count as f64);
            let m = bn.momentum;
            for ch in 0..c {
                bn.running_mean[ch] = (1.0 - m) * bn.running_mean[ch] + m * mean[ch];
                bn.running_var[ch] = (1.0 - m) * bn.running_var[ch] + m * var[ch];
            }
            (mean, var)
        }
        BnMode::Infer => (bn.running_mean.clone(), bn.running_var.clone()),
    };
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + bn.eps).sqrt()).collect();

    let mut x_hat = input.clone();
    let mut out = input.clone();
    let plane = input.shape().plane();
    for (i, (xh, o)) in x_hat
        .as_mut_slice()
        .chunks_mut(plane)
        .zip(out.as_mut_slice().chunks_mut(plane))
        .enumerate()
    {
        let ch = i % c;
        let (m, s, g, b) = (mean[ch], inv_std[ch], bn.gamma.value[ch], bn.beta.value[ch]);
        for (xv, ov) in xh.iter_mut().zip(o.iter_mut()) {
            *xv = (*xv - m) * s;
            *ov = g * *xv + b;
        }
    }
    Ok((
        out,
        BnCache {
            x_hat,
            inv_std,
            mode: bn.mode,
        },
    ))
}

pub fn batchnorm_backward(bn: &BatchNorm, cache: &BnCache, grad_out: &Tensor4) -> Result<BnGrads> {
    grad_out.expect_shape(cache.x_hat.shape(), "batchnorm_backward grad_out")?;
    let c = bn.channels;
    let mut d_beta = vec![0.0; c];
    let mut d_gamma = vec![0.0; c];
    for ((ch, g), (_, xh)) in planes(grad_out).zip(planes(&cache.x_hat)) {
        d_beta[ch] += g.iter().sum::<f64>();
        d_gamma[ch] += g.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>();
    }
    let count = (grad_out.n() * grad_out.shape().plane()) as f64;
    let plane = grad_out.shape().plane();
    let mut d_in = grad_out.clone();
    for (i, (d, xh)) in d_in
        .as_mut_slice()
        .chunks_mut(plane)
        .zip(cache.x_hat.as_slice().chunks(plane))
        .enumerate()
    {
        let ch = i % c;
        let scale = bn.gamma.value[ch] * cache.inv_std[ch];
        match cache.mode {
            BnMode::Train => {
                let (db, dg) = (d_beta[ch] / count, d_gamma[ch] / count);
                for (dv, x) in d.iter_mut().zip(xh) {
                    *dv = scale * (*dv - db - x * dg);
                }
            }
            BnMode::Infer => d.iter_mut().for_each(|dv| *dv *= scale),
        }
    }
    Ok(BnGrads {
        input: d_in,
        gamma: d_gamma,
        beta: d_beta,
    })
}
