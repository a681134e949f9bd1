use super::param::{Param, ParamKind};
use crate::error::{Error, Result};
use crate::tensor::Tensor4;

pub const DEFAULT_ALPHA: f64 = 0.25;

/// Per-channel parametric ReLU: `x` for `x >= 0`, `alpha[c] * x` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PRelu {
    channels: usize,
    pub alpha: Param,
}

#[derive(Debug, Clone)]
pub struct PReluGrads {
    pub input: Tensor4,
    pub alpha: Vec<f64>,
}

impl PRelu {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            alpha: Param::filled(ParamKind::PreluAlpha, channels, DEFAULT_ALPHA),
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    fn check(&self, input: &Tensor4) -> Result<()> {
        if input.c() != self.channels {
            return Err(Error::Shape(format!(
                "prelu expects {} channels, got {}",
                self.channels,
                input.c()
            )));
        }
        Ok(())
    }
}

pub fn prelu_forward(input: &Tensor4, p: &PRelu) -> Result<Tensor4> {
    p.check(input)?;
    let c = p.channels;
    let plane = input.shape().plane();
    let mut out = input.clone();
    for (i, chunk) in out.as_mut_slice().chunks_mut(plane).enumerate() {
        let a = p.alpha.value[i % c];
        for v in chunk.iter_mut().filter(|v| **v < 0.0) {
            *v *= a;
        }
    }
    Ok(out)
}

/// The derivative at exactly zero takes the `x >= 0` branch (slope 1).
pub fn prelu_backward(input: &Tensor4, p: &PRelu, grad_out: &Tensor4) -> Result<PReluGrads> {
    p.check(input)?;
    grad_out.expect_shape(input.shape(), "prelu_backward grad_out")?;
    let c = p.channels;
    let plane = input.shape().plane();
    let mut d_alpha = vec![0.0; c];
    let mut d_in = grad_out.clone();
    for (i, (d, x)) in d_in
        .as_mut_slice()
        .chunks_mut(plane)
        .zip(input.as_slice().chunks(plane))
        .enumerate()
    {
        let ch = i % c;
        let a = p.alpha.value[ch];
        for (dv, &xv) in d.iter_mut().zip(x) {
            if xv < 0.0 {
                d_alpha[ch] += *dv * xv;
                *dv *= a;
            }
        }
    }
    Ok(PReluGrads {
        input: d_in,
        alpha: d_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape4;

    #[test]
    fn unit_alpha_is_identity() {
        let mut p = PRelu::new(1);
        p.alpha.value[0] = 1.0;
        let x = Tensor4::from_fn(Shape4::new(1, 1, 3, 3), |i| i as f64 - 4.0).unwrap();
        assert_eq!(prelu_forward(&x, &p).unwrap(), x);
    }

    #[test]
    fn quarter_slope() {
        let p = PRelu::new(1);
        let x = Tensor4::from_vec(Shape4::new(1, 1, 1, 3), vec![-4.0, 4.0, 0.0]).unwrap();
        let y = prelu_forward(&x, &p).unwrap();
        assert_eq!(y.as_slice(), &[-1.0, 4.0, 0.0]);
        let g = Tensor4::filled(x.shape(), 1.0).unwrap();
        let grads = prelu_backward(&x, &p, &g).unwrap();
        assert_eq!(grads.input.as_slice(), &[0.25, 1.0, 1.0]);
        assert_eq!(grads.alpha, vec![-4.0]);
    }

    #[test]
    fn channel_mismatch() {
        let p = PRelu::new(2);
        let x = Tensor4::zeros(Shape4::new(1, 1, 2, 2)).unwrap();
        assert!(matches!(prelu_forward(&x, &p), Err(Error::Shape(_))));
    }
}
