use std::time::Instant;

use super::psnr::psnr;
use super::report::{EvalReport, EvalRow, ImageScore};
use crate::data::{add_noise, Image, LabeledImage, NoiseSpec, Rng};
use crate::error::{Error, Result};
use crate::krnet::Network;
use crate::nn::BnMode;
use crate::train::EVAL_STREAM;

/// Runs the network in inference mode on one image and clips the result to `[0, 1]`.
pub fn denoise(net: &mut Network, noisy: &Image) -> Result<Image> {
    net.set_mode(BnMode::Infer);
    let out = net.forward(&noisy.to_tensor())?;
    net.clear_cache();
    Ok(Image::from_tensor(&out)?.clipped())
}

/// Corrupts every image with `spec` (seeded), denoises it, and scores both the
/// noisy input and the output against the clean image. Images whose channel
/// count does not match the network are skipped and listed in the row.
pub fn evaluate(
    net: &Network,
    images: &[LabeledImage],
    spec: &NoiseSpec,
    seed: u64,
    label: &str,
) -> Result<EvalReport> {
    Ok(EvalReport {
        rows: vec![evaluate_row(net, images, spec, seed, label)?],
    })
}

pub fn evaluate_row(
    net: &Network,
    images: &[LabeledImage],
    spec: &NoiseSpec,
    seed: u64,
    label: &str,
) -> Result<EvalRow> {
    if images.is_empty() {
        return Err(Error::Data("evaluation set is empty".into()));
    }
    spec.validate()?;
    let start = Instant::now();
    let mut net = net.clone();
    let mut rng = Rng::derive(seed, EVAL_STREAM);
    let mut scores = Vec::with_capacity(images.len());
    let mut skipped = Vec::new();
    for item in images {
        if item.image.channels() != net.in_channels() || spec.check_channels(item.image.channels()).is_err() {
            skipped.push(item.name.clone());
            continue;
        }
        let noisy = add_noise(&item.image, spec, &mut rng)?.image;
        let out = denoise(&mut net, &noisy)?;
        scores.push(ImageScore {
            name: item.name.clone(),
            noisy_psnr: psnr(&item.image, &noisy, 1.0)?,
            psnr: psnr(&item.image, &out, 1.0)?,
        });
    }
    if scores.is_empty() {
        return Err(Error::Data(format!(
            "no evaluable images: all {} skipped for channel mismatch",
            skipped.len()
        )));
    }
    let mut row = EvalRow::from_scores(
        label.to_string(),
        spec.to_string(),
        scores,
        start.elapsed().as_secs_f64(),
    );
    row.skipped = skipped;
    Ok(row)
}
