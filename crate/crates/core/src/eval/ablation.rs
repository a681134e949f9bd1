use super::evaluate::evaluate_row;
use super::report::EvalReport;
use crate::data::{add_noise, LabeledImage, NoiseSpec, PatchSet, Rng};
use crate::error::{Error, Result};
use crate::krnet::{KrBlockVariant, Network, NetworkConfig};
use crate::nn::BnMode;
use crate::tensor::Tensor4;
use crate::train::{mse_loss, TrainConfig, TrainState};

const VAL_STREAM: u64 = 4;

/// Data shared by every ablation cell.
pub struct AblationData<'a> {
    pub train_patches: &'a PatchSet,
    pub val_images: &'a [LabeledImage],
    pub test_images: &'a [LabeledImage],
    pub noise: &'a NoiseSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValSeries {
    pub label: String,
    /// Validation MSE after each epoch.
    pub losses: Vec<f64>,
}

impl ValSeries {
    /// `epoch,loss` CSV, epochs counted from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for (i, l) in self.losses.iter().enumerate() {
            out.push_str(&format!("{},{l:e}\n", i + 1));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationResult {
    pub report: EvalReport,
    pub series: Vec<ValSeries>,
}

pub fn cell_label(variant: KrBlockVariant, blocks: usize) -> String {
    format!("KRNET{blocks} {variant}")
}

/// Fixed noisy/clean validation pairs, identical for every cell.
fn validation_pairs(images: &[LabeledImage], spec: &NoiseSpec, seed: u64) -> Result<Vec<(Tensor4, Tensor4)>> {
    let mut rng = Rng::derive(seed, VAL_STREAM);
    images
        .iter()
        .map(|item| {
            let noisy = add_noise(&item.image, spec, &mut rng)?.image;
            Ok((noisy.to_tensor(), item.image.to_tensor()))
        })
        .collect()
}

pub fn validation_loss(net: &mut Network, pairs: &[(Tensor4, Tensor4)]) -> Result<f64> {
    net.set_mode(BnMode::Infer);
    let mut total = 0.0;
    for (noisy, clean) in pairs {
        let pred = net.forward(noisy)?;
        total += mse_loss(&pred, clean)?.0;
    }
    net.clear_cache();
    net.set_mode(BnMode::Train);
    Ok(total / pairs.len() as f64)
}

/// Trains one network per `(variant, block count)` cell with the same seed and
/// data order, records the validation loss after every epoch, and evaluates
/// each trained network on the test images.
pub fn ablation_run(
    base: &NetworkConfig,
    variants: &[KrBlockVariant],
    block_counts: &[usize],
    train: &TrainConfig,
    data: &AblationData<'_>,
) -> Result<AblationResult> {
    if variants.is_empty() || block_counts.is_empty() {
        return Err(Error::Argument("ablation needs at least one variant and one block count".into()));
    }
    if data.val_images.is_empty() {
        return Err(Error::Data("ablation needs validation images".into()));
    }
    let cells: Vec<NetworkConfig> = variants
        .iter()
        .flat_map(|&variant| {
            block_counts.iter().map(move |&num_blocks| NetworkConfig {
                variant,
                num_blocks,
                ..base.clone()
            })
        })
        .collect();
    for cfg in &cells {
        cfg.validate()?;
        train.validate(cfg)?;
    }
    let val = validation_pairs(data.val_images, data.noise, train.seed)?;
    let mut report = EvalReport::default();
    let mut series = Vec::with_capacity(cells.len());
    for cfg in &cells {
        let label = cell_label(cfg.variant, cfg.num_blocks);
        let mut state = TrainState::new(cfg, train)?;
        let mut losses = Vec::with_capacity(train.epochs);
        while !state.is_done() {
            state.run_epoch(data.train_patches, data.noise)?;
            losses.push(validation_loss(&mut state.net, &val)?);
        }
        report
            .rows
            .push(evaluate_row(&state.net, data.test_images, data.noise, train.seed, &label)?);
        series.push(ValSeries { label, losses });
    }
    Ok(AblationResult { report, series })
}
