//! Central finite-difference checks of every hand-written backward pass.
//!
//! Each primitive is checked on the scalar `Σ g ⊙ forward(x)` for a random
//! `g`; the full network is checked on `Σ x̂²` for a 1% sample of its
//! parameters. The numeric side only ever calls forward passes.
//!
//! The error of one entry is `|a - n| / max(|a|, |n|, floor)` where
//! `floor = FLOOR_FRACTION * max|a|` over the entries of that check. The floor
//! keeps gradients that are exactly zero in theory (a conv bias feeding batch
//! norm) from turning pure rounding noise into a large relative error.

use crate::data::Rng;
use crate::error::{Error, Result};
use crate::krnet::{build_network, Network, NetworkConfig};
use crate::nn::{
    batchnorm_backward, batchnorm_forward, conv2d_backward, conv2d_forward,
    conv2d_transpose_backward, conv2d_transpose_forward, eltwise_add, eltwise_add_backward,
    prelu_backward, prelu_forward, BatchNorm, ConvLayer, PRelu,
};
use crate::tensor::{Shape4, Tensor4};

pub const STEP: f64 = 1e-6;
pub const FLOOR_FRACTION: f64 = 1e-3;
/// Parameter budget above which the network check refuses to run.
pub const MAX_PARAMS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerClass {
    Conv,
    TransposedConv,
    BatchNorm,
    PRelu,
    EltwiseAdd,
    Network,
}

impl LayerClass {
    pub const ALL: [LayerClass; 6] = [
        Self::Conv,
        Self::TransposedConv,
        Self::BatchNorm,
        Self::PRelu,
        Self::EltwiseAdd,
        Self::Network,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Conv => "conv",
            Self::TransposedConv => "transposed_conv",
            Self::BatchNorm => "batch_norm",
            Self::PRelu => "prelu",
            Self::EltwiseAdd => "eltwise_add",
            Self::Network => "network",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassResult {
    pub class: LayerClass,
    pub worst_rel_err: f64,
    pub entries: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub classes: Vec<ClassResult>,
    pub tolerance: f64,
    pub seeds: usize,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.classes.iter().all(|c| c.worst_rel_err < self.tolerance)
    }
}

#[derive(Debug, Clone)]
pub struct GradcheckOptions {
    pub network: NetworkConfig,
    pub seed: u64,
    pub seeds: usize,
    pub tolerance: f64,
    /// Test hook: scales every analytic gradient by 1.01 before comparison.
    pub corrupt_backward: bool,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            network: NetworkConfig::mini(1),
            seed: 0,
            seeds: 20,
            tolerance: 1e-4,
            corrupt_backward: false,
        }
    }
}

/// Accumulates analytic/numeric pairs for one check.
#[derive(Default)]
struct Pairs(Vec<(f64, f64)>);

impl Pairs {
    fn push(&mut self, analytic: f64, numeric: f64) {
        self.0.push((analytic, numeric));
    }

    fn worst(&self, corrupt: bool) -> f64 {
        let k = if corrupt { 1.01 } else { 1.0 };
        let scale = self.0.iter().map(|(a, _)| (a * k).abs()).fold(0.0, f64::max);
        let floor = (FLOOR_FRACTION * scale).max(f64::MIN_POSITIVE);
        self.0
            .iter()
            .map(|&(a, n)| {
                let a = a * k;
                (a - n).abs() / a.abs().max(n.abs()).max(floor)
            })
            .fold(0.0, f64::max)
    }
}

pub fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn random_tensor(shape: Shape4, rng: &mut Rng) -> Tensor4 {
    Tensor4::from_fn(shape, |_| rng.gaussian()).expect("valid test shape")
}

/// Central difference of `f` w.r.t. `values[i]`, restoring the value afterwards.
fn central<T>(target: &mut T, get: impl Fn(&mut T) -> &mut f64, mut f: impl FnMut(&mut T) -> Result<f64>) -> Result<f64> {
    let orig = *get(target);
    *get(target) = orig + STEP;
    let plus = f(target)?;
    *get(target) = orig - STEP;
    let minus = f(target)?;
    *get(target) = orig;
    Ok((plus - minus) / (2.0 * STEP))
}

fn check_conv(rng: &mut Rng, transposed: bool) -> Result<Pairs> {
    let (c_in, n_out, k) = (2, 3, 3);
    let mut layer = if transposed {
        ConvLayer::transposed(k, c_in, n_out)?
    } else {
        ConvLayer::new(k, c_in, n_out)?
    };
    layer.weight.value.iter_mut().for_each(|v| *v = rng.gaussian());
    layer.bias.value.iter_mut().for_each(|v| *v = rng.gaussian());
    let x = random_tensor(Shape4::new(2, c_in, 4, 4), rng);
    let g = random_tensor(Shape4::new(2, n_out, 4, 4), rng);
    let fwd = |x: &Tensor4, l: &ConvLayer| {
        if transposed {
            conv2d_transpose_forward(x, l)
        } else {
            conv2d_forward(x, l)
        }
    };
    let grads = if transposed {
        conv2d_transpose_backward(&x, &layer, &g)?
    } else {
        conv2d_backward(&x, &layer, &g)?
    };
    let mut pairs = Pairs::default();
    let mut state = (x, layer);
    for i in 0..state.0.len() {
        let n = central(&mut state, |s| &mut s.0.as_mut_slice()[i], |s| fwd(&s.0, &s.1)?.dot(&g))?;
        pairs.push(grads.input.as_slice()[i], n);
    }
    for i in 0..state.1.weight.len() {
        let n = central(&mut state, |s| &mut s.1.weight.value[i], |s| fwd(&s.0, &s.1)?.dot(&g))?;
        pairs.push(grads.weight[i], n);
    }
    for i in 0..state.1.bias.len() {
        let n = central(&mut state, |s| &mut s.1.bias.value[i], |s| fwd(&s.0, &s.1)?.dot(&g))?;
        pairs.push(grads.bias[i], n);
    }
    Ok(pairs)
}

fn check_batchnorm(rng: &mut Rng) -> Result<Pairs> {
    let c = 3;
    let mut bn = BatchNorm::new(c);
    bn.gamma.value.iter_mut().for_each(|v| *v = rng.gaussian());
    bn.beta.value.iter_mut().for_each(|v| *v = rng.gaussian());
    let x = random_tensor(Shape4::new(2, c, 4, 4), rng);
    let g = random_tensor(x.shape(), rng);
    let (_, cache) = batchnorm_forward(&x, &mut bn)?;
    let grads = batchnorm_backward(&bn, &cache, &g)?;
    let f = |s: &mut (Tensor4, BatchNorm)| batchnorm_forward(&s.0, &mut s.1)?.0.dot(&g);
    let mut pairs = Pairs::default();
    let mut state = (x, bn);
    for i in 0..state.0.len() {
        pairs.push(grads.input.as_slice()[i], central(&mut state, |s| &mut s.0.as_mut_slice()[i], f)?);
    }
    for i in 0..c {
        pairs.push(grads.gamma[i], central(&mut state, |s| &mut s.1.gamma.value[i], f)?);
        pairs.push(grads.beta[i], central(&mut state, |s| &mut s.1.beta.value[i], f)?);
    }
    Ok(pairs)
}

fn check_prelu(rng: &mut Rng) -> Result<Pairs> {
    let c = 3;
    let mut p = PRelu::new(c);
    p.alpha.value.iter_mut().for_each(|v| *v = rng.uniform_range(0.05, 0.5));
    // Keep every entry at least 1e-3 away from the kink.
    let x = Tensor4::from_fn(Shape4::new(2, c, 3, 3), |_| {
        let v = rng.gaussian();
        if v.abs() < 1e-3 {
            1e-3f64.copysign(v)
        } else {
            v
        }
    })?;
    let g = random_tensor(x.shape(), rng);
    let grads = prelu_backward(&x, &p, &g)?;
    let f = |s: &mut (Tensor4, PRelu)| prelu_forward(&s.0, &s.1)?.dot(&g);
    let mut pairs = Pairs::default();
    let mut state = (x, p);
    for i in 0..state.0.len() {
        pairs.push(grads.input.as_slice()[i], central(&mut state, |s| &mut s.0.as_mut_slice()[i], f)?);
    }
    for i in 0..c {
        pairs.push(grads.alpha[i], central(&mut state, |s| &mut s.1.alpha.value[i], f)?);
    }
    Ok(pairs)
}

fn check_add(rng: &mut Rng) -> Result<Pairs> {
    let shape = Shape4::new(2, 2, 3, 3);
    let a = random_tensor(shape, rng);
    let b = random_tensor(shape, rng);
    let g = random_tensor(shape, rng);
    let (ga, gb) = eltwise_add_backward(&g);
    let f = |s: &mut (Tensor4, Tensor4)| eltwise_add(&s.0, &s.1)?.dot(&g);
    let mut pairs = Pairs::default();
    let mut state = (a, b);
    for i in 0..shape.numel()? {
        pairs.push(ga.as_slice()[i], central(&mut state, |s| &mut s.0.as_mut_slice()[i], f)?);
        pairs.push(gb.as_slice()[i], central(&mut state, |s| &mut s.1.as_mut_slice()[i], f)?);
    }
    Ok(pairs)
}

fn sum_squares(net: &mut Network, y: &Tensor4) -> Result<f64> {
    let out = net.forward(y)?;
    Ok(out.as_slice().iter().map(|v| v * v).sum())
}

/// Checks `d Σ x̂² / dθ` for a random 1% (at least 24 entries) of the parameters
/// of a network built from `config`, in train mode on a 2-sample batch.
pub fn check_network(config: &NetworkConfig, rng: &mut Rng) -> Result<Vec<(f64, f64)>> {
    let mut net = build_network(config, rng.next_u64())?;
    if net.num_params() >= MAX_PARAMS {
        return Err(Error::Config(format!(
            "network has {} parameters; gradient checks are limited to {MAX_PARAMS}",
            net.num_params()
        )));
    }
    // Random γ, β, α and biases so no parameter class sits at a special value.
    for p in net.params_mut() {
        use crate::nn::ParamKind::*;
        match p.kind {
            ConvWeight => {}
            ConvBias | BnBeta => p.value.iter_mut().for_each(|v| *v = 0.1 * rng.gaussian()),
            BnGamma => p.value.iter_mut().for_each(|v| *v = rng.uniform_range(0.5, 1.5)),
            PreluAlpha => p.value.iter_mut().for_each(|v| *v = rng.uniform_range(0.1, 0.4)),
        }
    }
    let side = 10;
    let y = random_tensor(Shape4::new(2, config.in_channels, side, side), rng);
    let out = net.forward(&y)?;
    net.backward(&out.map(|v| 2.0 * v))?;

    let sizes: Vec<usize> = net.params().iter().map(|p| p.len()).collect();
    let total: usize = sizes.iter().sum();
    let samples = (total / 100).max(24);
    let mut picks = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut flat = rng.below(total as u64) as usize;
        let mut pid = 0;
        while flat >= sizes[pid] {
            flat -= sizes[pid];
            pid += 1;
        }
        picks.push((pid, flat));
    }
    let mut pairs = Vec::with_capacity(samples);
    for (pid, idx) in picks {
        let analytic = net.params()[pid].grad[idx];
        let numeric = central(
            &mut net,
            |n| &mut n.params_mut().into_iter().nth(pid).expect("pid in range").value[idx],
            |n| sum_squares(n, &y),
        )?;
        pairs.push((analytic, numeric));
    }
    Ok(pairs)
}

/// Worst error per layer class over `opts.seeds` seeds.
pub fn run_gradcheck(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    if opts.seeds == 0 {
        return Err(Error::Argument("at least one seed is required".into()));
    }
    let mut worst = [0.0f64; 6];
    let mut entries = [0usize; 6];
    for s in 0..opts.seeds {
        let mut rng = Rng::derive(opts.seed, s as u64);
        let checks = [
            check_conv(&mut rng, false)?,
            check_conv(&mut rng, true)?,
            check_batchnorm(&mut rng)?,
            check_prelu(&mut rng)?,
            check_add(&mut rng)?,
            Pairs(check_network(&opts.network, &mut rng)?),
        ];
        for (i, pairs) in checks.iter().enumerate() {
            worst[i] = worst[i].max(pairs.worst(opts.corrupt_backward));
            entries[i] += pairs.0.len();
        }
    }
    Ok(GradcheckReport {
        classes: LayerClass::ALL
            .iter()
            .enumerate()
            .map(|(i, &class)| ClassResult {
                class,
                worst_rel_err: worst[i],
                entries: entries[i],
            })
            .collect(),
        tolerance: opts.tolerance,
        seeds: opts.seeds,
    })
}
