//! Command-line front end for KRNET: training, denoising, evaluation, gradient
//! checks, synthetic data and block-variant ablations.
//!
//! Every failure maps to one exit status: 2 for configuration errors, 3 for
//! data errors and 4 for checkpoint errors.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use krnet_core::{KrBlockVariant, ReportFormat};

mod commands;
mod config;
mod error;

pub use commands::{
    checkpoint_file, cmd_ablation, cmd_denoise, cmd_eval, cmd_gradcheck, cmd_synth_data, cmd_train, MODEL_FILE,
};
pub use config::{DataConfig, RunConfig};
pub use error::{CliError, ExitKind};

#[derive(Debug, Parser)]
#[command(name = "krnet", version, about = "Train and run the KRNET image denoiser")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network from a JSON run config.
    Train(TrainArgs),
    /// Denoise one PGM/PPM image with a trained model.
    Denoise(DenoiseArgs),
    /// Corrupt, denoise and score every image of a manifest.
    Eval(EvalArgs),
    /// Check every backward pass against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Write a deterministic synthetic image corpus and its manifest.
    SynthData(SynthArgs),
    /// Train and compare KR-block variants on a shared data order.
    Ablation(AblationArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Run config (JSON with keys network, train, noise, data, out_dir).
    #[arg(long)]
    pub config: PathBuf,
    /// Continue from a checkpoint written by the same run config.
    #[arg(long, value_name = "CKPT")]
    pub resume: Option<PathBuf>,
    /// Override train.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override train.epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseArgs {
    /// Trained model or checkpoint (.krn).
    #[arg(long)]
    pub model: PathBuf,
    /// Noisy input image (binary P5 or P6, maxval 255).
    #[arg(long = "in", value_name = "IMAGE")]
    pub input: PathBuf,
    /// Where to write the denoised image.
    #[arg(long = "out", value_name = "IMAGE")]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Trained model or checkpoint (.krn).
    #[arg(long)]
    pub model: PathBuf,
    /// Manifest of clean test images, one path per line.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Noise as JSON, e.g. '{"kind":"awgn","sigma":25}', '{"kind":"mc","sigma_r":40,"sigma_g":20,"sigma_b":30}'
    /// or '{"kind":"blind","lo":0,"hi":55}'.
    #[arg(long, default_value = r#"{"kind":"awgn","sigma":25}"#)]
    pub noise: String,
    /// Seed of the corrupting noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report format: text or csv.
    #[arg(long, default_value = "text", value_parser = parse_format)]
    pub format: ReportFormat,
    /// Row label; defaults to the block count and variant of the model.
    #[arg(long)]
    pub label: Option<String>,
    /// Append a wall_time_s column (not reproducible between runs).
    #[arg(long)]
    pub wall_time: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    /// Run config whose `network` section is checked; defaults to the gray mini network.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base seed; each repetition derives its own stream from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random repetitions.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Test hook: scale every analytic gradient by 1.01 so the check must fail.
    #[arg(long)]
    pub corrupt_backward: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of images.
    #[arg(long, default_value_t = 24)]
    pub count: usize,
    /// Image size as HxW.
    #[arg(long, default_value = "32x32", value_parser = parse_size)]
    pub size: (usize, usize),
    /// 1 for gray (PGM) or 3 for color (PPM).
    #[arg(long, default_value_t = 1, value_parser = parse_channels)]
    pub channels: usize,
    /// Corpus seed; equal seeds give byte-identical files.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct AblationArgs {
    /// Run config; data.val_manifest and data.test_manifest are required.
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated block variants.
    #[arg(long, value_delimiter = ',', default_value = "KR7_3,KR3_3,KR7_7", value_parser = parse_variant)]
    pub variants: Vec<KrBlockVariant>,
    /// Comma-separated block counts; defaults to network.num_blocks.
    #[arg(long, value_delimiter = ',')]
    pub blocks: Vec<usize>,
    /// Override train.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override train.epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: krnet_core::Error| e.to_string())
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let dim = |v: &str| match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("bad dimension {v:?} in {s:?}")),
    };
    Ok((dim(h)?, dim(w)?))
}

fn parse_channels(s: &str) -> Result<usize, String> {
    match s {
        "1" => Ok(1),
        "3" => Ok(3),
        _ => Err(format!("channels must be 1 or 3, got {s:?}")),
    }
}

fn parse_variant(s: &str) -> Result<KrBlockVariant, String> {
    KrBlockVariant::ALL
        .into_iter()
        .find(|v| {
            let json = serde_json::to_string(v).unwrap_or_default();
            json.trim_matches('"') == s || v.label() == s
        })
        .ok_or_else(|| format!("unknown variant {s:?}; expected KR7_3, KR3_3 or KR7_7"))
}

/// Runs one command. `Ok(false)` means the command ran but its check failed
/// (only `gradcheck` reports this).
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<bool, CliError> {
    match &cli.command {
        Command::Train(a) => cmd_train(a, out).map(|_| true),
        Command::Denoise(a) => cmd_denoise(a).map(|_| true),
        Command::Eval(a) => cmd_eval(a, out).map(|_| true),
        Command::Gradcheck(a) => cmd_gradcheck(a, out),
        Command::SynthData(a) => cmd_synth_data(a).map(|_| true),
        Command::Ablation(a) => cmd_ablation(a, out).map(|_| true),
    }
}
