use super::config::KrBlockVariant;
use super::unit::CompositeUnit;
use crate::error::{Error, Result};
use crate::nn::{eltwise_add, Param};
use crate::tensor::Tensor4;

/// Kernel-regulation block: 1x1 reduce, large unit, small unit in series,
/// pixel-wise sum of the large and small outputs, 1x1 expand.
///
/// Input and output both have `channels` channels; only the two 1x1 units
/// change width.
#[derive(Debug, Clone)]
pub struct KrBlock {
    pub reduce: CompositeUnit,
    pub large: CompositeUnit,
    pub small: CompositeUnit,
    pub expand: CompositeUnit,
    variant: KrBlockVariant,
}

impl KrBlock {
    pub fn new(channels: usize, reduced: usize, variant: KrBlockVariant) -> Result<Self> {
        let (large, small) = variant.kernels();
        Ok(Self {
            reduce: CompositeUnit::new(1, channels, reduced)?,
            large: CompositeUnit::new(large, reduced, reduced)?,
            small: CompositeUnit::new(small, reduced, reduced)?,
            expand: CompositeUnit::new(1, reduced, channels)?,
            variant,
        })
    }

    pub fn variant(&self) -> KrBlockVariant {
        self.variant
    }

    pub fn channels(&self) -> usize {
        self.reduce.c_in()
    }

    pub fn units(&self) -> [&CompositeUnit; 4] {
        [&self.reduce, &self.large, &self.small, &self.expand]
    }

    pub fn units_mut(&mut self) -> [&mut CompositeUnit; 4] {
        [
            &mut self.reduce,
            &mut self.large,
            &mut self.small,
            &mut self.expand,
        ]
    }

    pub fn params(&self) -> Vec<&Param> {
        self.units().into_iter().flat_map(|u| u.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.units_mut()
            .into_iter()
            .flat_map(|u| u.params_mut())
            .collect()
    }
}

pub fn kr_block_forward(block: &mut KrBlock, input: &Tensor4) -> Result<Tensor4> {
    if input.c() != block.channels() {
        return Err(Error::Config(format!(
            "KR-block expects {} channels, got {}",
            block.channels(),
            input.c()
        )));
    }
    let r = block.reduce.forward(input)?;
    let large = block.large.forward(&r)?;
    let small = block.small.forward(&large)?;
    let blended = eltwise_add(&large, &small)?;
    block.expand.forward(&blended)
}

pub fn kr_block_backward(block: &mut KrBlock, grad_out: &Tensor4) -> Result<Tensor4> {
    let g_blend = block.expand.backward(grad_out)?;
    // The large output feeds both the sum and the small unit.
    let g_through_small = block.small.backward(&g_blend)?;
    let g_large = eltwise_add(&g_blend, &g_through_small)?;
    let g_r = block.large.backward(&g_large)?;
    block.reduce.backward(&g_r)
}
