use crate::error::{Error, Result};
use crate::nn::{
    batchnorm_backward, batchnorm_forward, conv2d_backward, conv2d_forward, prelu_backward,
    prelu_forward, BatchNorm, BnCache, ConvLayer, PRelu, Param,
};
use crate::tensor::Tensor4;

#[derive(Debug, Clone)]
struct UnitCache {
    input: Tensor4,
    bn: BnCache,
    bn_out: Tensor4,
}

/// Conv → BN → PReLU, always in that order.
#[derive(Debug, Clone)]
pub struct CompositeUnit {
    pub conv: ConvLayer,
    pub bn: BatchNorm,
    pub act: PRelu,
    cache: Option<UnitCache>,
}

impl CompositeUnit {
    pub fn new(kernel: usize, c_in: usize, c_out: usize) -> Result<Self> {
        Ok(Self {
            conv: ConvLayer::new(kernel, c_in, c_out)?,
            bn: BatchNorm::new(c_out),
            act: PRelu::new(c_out),
            cache: None,
        })
    }

    pub fn c_in(&self) -> usize {
        self.conv.c_in()
    }

    pub fn c_out(&self) -> usize {
        self.conv.n_out()
    }

    pub fn forward(&mut self, input: &Tensor4) -> Result<Tensor4> {
        let z = conv2d_forward(input, &self.conv)?;
        let (bn_out, bn) = batchnorm_forward(&z, &mut self.bn)?;
        let out = prelu_forward(&bn_out, &self.act)?;
        self.cache = Some(UnitCache {
            input: input.clone(),
            bn,
            bn_out,
        });
        Ok(out)
    }

    /// Accumulates parameter gradients and returns the gradient w.r.t. the input.
    pub fn backward(&mut self, grad_out: &Tensor4) -> Result<Tensor4> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::State("composite unit backward called before forward".into()))?;
        let act = prelu_backward(&cache.bn_out, &self.act, grad_out)?;
        self.act.alpha.accumulate(&act.alpha);
        let bn = batchnorm_backward(&self.bn, &cache.bn, &act.input)?;
        self.bn.gamma.accumulate(&bn.gamma);
        self.bn.beta.accumulate(&bn.beta);
        let conv = conv2d_backward(&cache.input, &self.conv, &bn.input)?;
        self.conv.weight.accumulate(&conv.weight);
        self.conv.bias.accumulate(&conv.bias);
        Ok(conv.input)
    }

    pub fn clear_cache(&mut self) {
        self.cache = None;
    }

    /// Parameters in fixed order: conv weight, conv bias, gamma, beta, alpha.
    pub fn params(&self) -> [&Param; 5] {
        [
            &self.conv.weight,
            &self.conv.bias,
            &self.bn.gamma,
            &self.bn.beta,
            &self.act.alpha,
        ]
    }

    pub fn params_mut(&mut self) -> [&mut Param; 5] {
        [
            &mut self.conv.weight,
            &mut self.conv.bias,
            &mut self.bn.gamma,
            &mut self.bn.beta,
            &mut self.act.alpha,
        ]
    }
}
