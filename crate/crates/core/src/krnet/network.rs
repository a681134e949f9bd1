use super::block::{kr_block_backward, kr_block_forward, KrBlock};
use super::config::{receptive_field_of, NetworkConfig, RECON_KERNEL};
use super::unit::CompositeUnit;
use crate::data::Rng;
use crate::error::{Error, Result};
use crate::nn::{
    conv2d_transpose_backward, conv2d_transpose_forward, eltwise_add, BatchNorm, BnMode,
    ConvLayer, Param,
};
use crate::tensor::Tensor4;
use crate::train::he_init;

/// A full KRNET: two extraction units, shrink, cascaded KR-blocks with
/// additive skips, expand, a 3x3 reconstruction unit and a transposed
/// convolution whose output is added to the input.
#[derive(Debug, Clone)]
pub struct Network {
    config: NetworkConfig,
    pub extract: [CompositeUnit; 2],
    pub shrink: CompositeUnit,
    pub blocks: Vec<KrBlock>,
    pub expand_stage: CompositeUnit,
    pub recon_conv: CompositeUnit,
    pub recon_deconv: ConvLayer,
    deconv_input: Option<Tensor4>,
}

/// Builds a network with He-initialised conv weights, zero biases, γ=1, β=0
/// and PReLU α=0.25. Weights are drawn in parameter order from `Rng::new(seed)`.
pub fn build_network(config: &NetworkConfig, seed: u64) -> Result<Network> {
    config.validate()?;
    let c = config;
    let (ef, ek) = (c.extract_filters, c.extract_kernel);
    let blocks = (0..c.num_blocks)
        .map(|_| KrBlock::new(c.shrink_channels, c.block_channels_reduced, c.variant))
        .collect::<Result<Vec<_>>>()?;
    let mut net = Network {
        config: c.clone(),
        extract: [
            CompositeUnit::new(ek, c.in_channels, ef)?,
            CompositeUnit::new(ek, ef, ef)?,
        ],
        shrink: CompositeUnit::new(1, ef, c.shrink_channels)?,
        blocks,
        expand_stage: CompositeUnit::new(1, c.shrink_channels, ef)?,
        recon_conv: CompositeUnit::new(RECON_KERNEL, ef, c.recon_filters)?,
        recon_deconv: ConvLayer::transposed(RECON_KERNEL, c.recon_filters, c.in_channels)?,
        deconv_input: None,
    };
    let mut rng = Rng::new(seed);
    for conv in net.convs_mut() {
        conv.weight.value = he_init(conv.weight_shape_for_init(), &mut rng);
    }
    for (id, p) in net.params_mut().into_iter().enumerate() {
        p.id = id;
    }
    Ok(net)
}

impl ConvLayer {
    /// `(n_out, fan_in_channels, f, f)` so that `he_init` sees the true fan-in.
    fn weight_shape_for_init(&self) -> (usize, usize, usize, usize) {
        (self.n_out(), self.c_in(), self.kernel(), self.kernel())
    }
}

impl Network {
    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn in_channels(&self) -> usize {
        self.config.in_channels
    }

    fn units(&self) -> Vec<&CompositeUnit> {
        let mut v: Vec<&CompositeUnit> = self.extract.iter().collect();
        v.push(&self.shrink);
        for b in &self.blocks {
            v.extend(b.units());
        }
        v.push(&self.expand_stage);
        v.push(&self.recon_conv);
        v
    }

    fn units_mut(&mut self) -> Vec<&mut CompositeUnit> {
        let mut v: Vec<&mut CompositeUnit> = self.extract.iter_mut().collect();
        v.push(&mut self.shrink);
        for b in &mut self.blocks {
            v.extend(b.units_mut());
        }
        v.push(&mut self.expand_stage);
        v.push(&mut self.recon_conv);
        v
    }

    fn convs_mut(&mut self) -> Vec<&mut ConvLayer> {
        let Network {
            extract,
            shrink,
            blocks,
            expand_stage,
            recon_conv,
            recon_deconv,
            ..
        } = self;
        let mut v: Vec<&mut ConvLayer> = extract.iter_mut().map(|u| &mut u.conv).collect();
        v.push(&mut shrink.conv);
        for b in blocks {
            v.extend(b.units_mut().into_iter().map(|u| &mut u.conv));
        }
        v.push(&mut expand_stage.conv);
        v.push(&mut recon_conv.conv);
        v.push(recon_deconv);
        v
    }

    /// All parameters in topological layer order. The order is a function of the config only.
    pub fn params(&self) -> Vec<&Param> {
        let mut v: Vec<&Param> = self.units().into_iter().flat_map(|u| u.params()).collect();
        v.push(&self.recon_deconv.weight);
        v.push(&self.recon_deconv.bias);
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let Network {
            extract,
            shrink,
            blocks,
            expand_stage,
            recon_conv,
            recon_deconv,
            ..
        } = self;
        let mut v: Vec<&mut Param> = extract.iter_mut().flat_map(|u| u.params_mut()).collect();
        v.extend(shrink.params_mut());
        for b in blocks {
            v.extend(b.params_mut());
        }
        v.extend(expand_stage.params_mut());
        v.extend(recon_conv.params_mut());
        v.push(&mut recon_deconv.weight);
        v.push(&mut recon_deconv.bias);
        v
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn batch_norms(&self) -> Vec<&BatchNorm> {
        self.units().into_iter().map(|u| &u.bn).collect()
    }

    pub fn batch_norms_mut(&mut self) -> Vec<&mut BatchNorm> {
        self.units_mut().into_iter().map(|u| &mut u.bn).collect()
    }

    pub fn set_mode(&mut self, mode: BnMode) {
        for bn in self.batch_norms_mut() {
            bn.mode = mode;
        }
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Sets every learnable value (including γ and α) to zero.
    pub fn zero_parameters(&mut self) {
        for p in self.params_mut() {
            p.value.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Kernel sides along the serial path of the layers actually built.
    pub fn serial_kernels(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self.units().iter().map(|u| u.conv.kernel()).collect();
        ks.push(self.recon_deconv.kernel());
        ks
    }

    pub fn receptive_field(&self) -> usize {
        receptive_field_of(&self.serial_kernels())
    }

    /// Drops cached activations; a subsequent backward fails until the next forward.
    pub fn clear_cache(&mut self) {
        self.deconv_input = None;
        for u in self.units_mut() {
            u.clear_cache();
        }
    }

    pub fn forward(&mut self, y: &Tensor4) -> Result<Tensor4> {
        network_forward(self, y)
    }

    pub fn backward(&mut self, grad_out: &Tensor4) -> Result<Tensor4> {
        network_backward(self, grad_out)
    }
}

/// `x̂ = deconv(recon(expand(b_K))) + y`, with `b_0 = shrink(extract(y))` and
/// `b_k = block_k(b_{k-1}) + b_{k-1}`.
pub fn network_forward(net: &mut Network, y: &Tensor4) -> Result<Tensor4> {
    if y.c() != net.in_channels() {
        return Err(Error::Config(format!(
            "network expects {} input channels, got {}",
            net.in_channels(),
            y.c()
        )));
    }
    net.deconv_input = None;
    let e1 = net.extract[0].forward(y)?;
    let e2 = net.extract[1].forward(&e1)?;
    let mut b = net.shrink.forward(&e2)?;
    for block in &mut net.blocks {
        let out = kr_block_forward(block, &b)?;
        b = eltwise_add(&out, &b)?;
    }
    let z = net.expand_stage.forward(&b)?;
    let r = net.recon_conv.forward(&z)?;
    let d = conv2d_transpose_forward(&r, &net.recon_deconv)?;
    net.deconv_input = Some(r);
    eltwise_add(&d, y)
}

/// Accumulates exact gradients into every `Param::grad` and returns the
/// gradient w.r.t. the network input (shortcut included).
pub fn network_backward(net: &mut Network, grad_out: &Tensor4) -> Result<Tensor4> {
    let r = net
        .deconv_input
        .as_ref()
        .ok_or_else(|| Error::State("network backward called before forward".into()))?;
    let deconv = conv2d_transpose_backward(r, &net.recon_deconv, grad_out)?;
    net.recon_deconv.weight.accumulate(&deconv.weight);
    net.recon_deconv.bias.accumulate(&deconv.bias);
    let g_z = net.recon_conv.backward(&deconv.input)?;
    let mut g_b = net.expand_stage.backward(&g_z)?;
    for block in net.blocks.iter_mut().rev() {
        let through = kr_block_backward(block, &g_b)?;
        g_b = eltwise_add(&through, &g_b)?;
    }
    let g_e2 = net.shrink.backward(&g_b)?;
    let g_e1 = net.extract[1].backward(&g_e2)?;
    let g_y = net.extract[0].backward(&g_e1)?;
    eltwise_add(&g_y, grad_out)
}
