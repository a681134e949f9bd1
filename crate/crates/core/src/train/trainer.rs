use serde::{Deserialize, Serialize};

use super::loss::mse_loss;
use super::optim::Sgd;
use super::schedule::{lr_at, LrSchedule};
use crate::data::{batch_iter, NoiseSpec, PatchSet, Rng};
use crate::error::{Error, Result};
use crate::krnet::{build_network, receptive_field, Network, NetworkConfig};
use crate::nn::BnMode;
use crate::tensor::Tensor4;

/// Stream ids for [`Rng::derive`]: patch cropping is recomputed from the seed
/// on resume, while the training stream (shuffles and noise) is checkpointed.
pub const PATCH_STREAM: u64 = 1;
pub const TRAIN_STREAM: u64 = 2;
pub const EVAL_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub patch_size: usize,
    pub decay_all: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            lr_start: 1e-1,
            lr_end: 1e-4,
            momentum: 0.9,
            weight_decay: 1e-4,
            batch_size: 16,
            seed: 0,
            patch_size: 75,
            decay_all: true,
        }
    }
}

impl TrainConfig {
    /// Checks hyperparameter ranges and that patches exceed the network's receptive field.
    pub fn validate(&self, network: &NetworkConfig) -> Result<()> {
        self.schedule()?;
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        // Also rejects NaN.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        let rf = receptive_field(network);
        if self.patch_size <= rf {
            return Err(Error::Config(format!(
                "patch_size {} must be larger than the receptive field ({rf} px)",
                self.patch_size
            )));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<LrSchedule> {
        LrSchedule::new(self.lr_start, self.lr_end, self.epochs)
    }

    pub fn optimizer(&self) -> Sgd {
        Sgd {
            momentum: self.momentum,
            weight_decay: self.weight_decay,
            decay_all: self.decay_all,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub mean_loss: f64,
    pub batches: usize,
    /// Loss of every step, measured before that step's update.
    pub step_losses: Vec<f64>,
}

/// One forward/loss/backward/update per batch, in iterator order.
pub fn train_epoch(
    net: &mut Network,
    batches: impl IntoIterator<Item = (Tensor4, Tensor4)>,
    opt: &Sgd,
    lr: f64,
) -> Result<EpochStats> {
    net.set_mode(BnMode::Train);
    let mut step_losses = Vec::new();
    for (noisy, clean) in batches {
        let pred = net.forward(&noisy)?;
        let (loss, grad) = mse_loss(&pred, &clean)?;
        net.backward(&grad)?;
        opt.step(net.params_mut(), lr);
        step_losses.push(loss);
    }
    if step_losses.is_empty() {
        return Err(Error::EmptyEpoch);
    }
    net.clear_cache();
    Ok(EpochStats {
        mean_loss: step_losses.iter().sum::<f64>() / step_losses.len() as f64,
        batches: step_losses.len(),
        step_losses,
    })
}

/// One line of the per-epoch stats stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub mean_loss: f64,
}

/// Everything needed to continue a run bit-exactly.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub net: Network,
    pub train: TrainConfig,
    /// Completed epochs.
    pub epoch: usize,
    pub rng: Rng,
}

impl TrainState {
    pub fn new(network: &NetworkConfig, train: &TrainConfig) -> Result<Self> {
        network.validate()?;
        train.validate(network)?;
        Ok(Self {
            net: build_network(network, train.seed)?,
            train: train.clone(),
            epoch: 0,
            rng: Rng::derive(train.seed, TRAIN_STREAM),
        })
    }

    pub fn is_done(&self) -> bool {
        self.epoch >= self.train.epochs
    }

    /// Trains epoch `self.epoch` (0-based) at `lr_at(self.epoch)` with freshly
    /// shuffled, freshly corrupted batches.
    pub fn run_epoch(&mut self, patches: &PatchSet, spec: &NoiseSpec) -> Result<(EpochRecord, EpochStats)> {
        if self.is_done() {
            return Err(Error::State(format!(
                "all {} epochs already completed",
                self.train.epochs
            )));
        }
        let lr = lr_at(&self.train.schedule()?, self.epoch)?;
        let opt = self.train.optimizer();
        let batches = batch_iter(patches, spec, self.train.batch_size, &mut self.rng)?;
        let stats = train_epoch(&mut self.net, batches, &opt, lr)?;
        self.epoch += 1;
        Ok((
            EpochRecord {
                epoch: self.epoch,
                lr,
                mean_loss: stats.mean_loss,
            },
            stats,
        ))
    }
}

/// Stream used to crop the training patches of a run.
pub fn patch_rng(seed: u64) -> Rng {
    Rng::derive(seed, PATCH_STREAM)
}
