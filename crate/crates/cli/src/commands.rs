use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use krnet_core::data::{crop_patches, load_manifest, read_pnm, synth::write_synthetic_corpus, write_pnm, LabeledImage};
use krnet_core::eval::{
    ablation_run, cell_label, denoise, evaluate, report_render, report_render_timed, AblationData,
};
use krnet_core::gradcheck::{run_gradcheck, GradcheckOptions};
use krnet_core::train::{checkpoint_load, checkpoint_save, patch_rng};
use krnet_core::{Image, NetworkConfig, NoiseSpec, TrainState};

use crate::config::{read_config, RunConfig, KEYS};
use crate::error::{CliError, Context, ExitKind};
use crate::{AblationArgs, DenoiseArgs, EvalArgs, GradcheckArgs, SynthArgs, TrainArgs};

pub const MODEL_FILE: &str = "model.krn";

pub fn checkpoint_file(epoch: usize) -> String {
    format!("ckpt_epoch_{epoch}.krn")
}

fn load_model(path: &Path) -> Result<TrainState, CliError> {
    checkpoint_load(path).context(ExitKind::Checkpoint, path.display())
}

fn save_checkpoint(state: &TrainState, path: &Path) -> Result<(), CliError> {
    checkpoint_save(state, path).context(ExitKind::Checkpoint, path.display())
}

fn write_line(out: &mut dyn Write, line: &str) -> Result<(), CliError> {
    writeln!(out, "{line}").context(ExitKind::Data, "cannot write to stdout")
}

fn load_images(manifest: &Path, channels: usize) -> Result<Vec<LabeledImage>, CliError> {
    let images = load_manifest(manifest)?;
    if images.is_empty() {
        return Err(CliError::data(format!("manifest {} lists no images", manifest.display())));
    }
    if let Some(bad) = images.iter().find(|l| l.image.channels() != channels) {
        return Err(CliError::data(format!(
            "{} has {} channel(s) but the network expects {channels}",
            bad.name,
            bad.image.channels()
        )));
    }
    Ok(images)
}

fn apply_overrides(cfg: &mut RunConfig, seed: Option<u64>, epochs: Option<usize>) {
    if let Some(seed) = seed {
        cfg.train.seed = seed;
    }
    if let Some(epochs) = epochs {
        cfg.train.epochs = epochs;
    }
}

/// Trains per the run config, streaming one JSON stats line per epoch and
/// writing `ckpt_epoch_{k}.krn` after every epoch plus `model.krn` at the end.
pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    apply_overrides(&mut cfg, args.seed, args.epochs);
    cfg.validate()?;

    let images = load_images(&cfg.data.train_manifest, cfg.network.in_channels)?;
    let clean: Vec<Image> = images.into_iter().map(|l| l.image).collect();
    let patches = crop_patches(
        &clean,
        cfg.train.patch_size,
        cfg.data.count_per_image,
        &mut patch_rng(cfg.train.seed),
    )?;
    if !patches.skipped.is_empty() {
        eprintln!(
            "krnet: warning: {} image(s) smaller than the {} px patch were skipped",
            patches.skipped.len(),
            cfg.train.patch_size
        );
    }

    let mut state = match &args.resume {
        Some(path) => {
            let mut state = load_model(path)?;
            let mut saved = state.train.clone();
            saved.epochs = cfg.train.epochs;
            if state.net.config() != &cfg.network || saved != cfg.train {
                return Err(CliError::checkpoint(format!(
                    "{} was written by a run with a different network or train config",
                    path.display()
                )));
            }
            state.train = saved;
            state
        }
        None => TrainState::new(&cfg.network, &cfg.train)?,
    };

    fs::create_dir_all(&cfg.out_dir).context(ExitKind::Data, cfg.out_dir.display())?;
    while !state.is_done() {
        let (record, _) = state.run_epoch(&patches, &cfg.noise)?;
        let line = serde_json::to_string(&record).expect("epoch record serializes");
        write_line(out, &line)?;
        save_checkpoint(&state, &cfg.out_dir.join(checkpoint_file(record.epoch)))?;
    }
    save_checkpoint(&state, &cfg.out_dir.join(MODEL_FILE))
}

/// Denoises one PNM image with a trained model.
pub fn cmd_denoise(args: &DenoiseArgs) -> Result<(), CliError> {
    let mut state = load_model(&args.model)?;
    let noisy = read_pnm(&args.input).context(ExitKind::Data, args.input.display())?;
    let expected = state.net.in_channels();
    if noisy.channels() != expected {
        return Err(CliError::config(format!(
            "model expects {expected} channel(s) but {} has {}",
            args.input.display(),
            noisy.channels()
        )));
    }
    let clean = denoise(&mut state.net, &noisy)?;
    write_pnm(&clean, &args.output).context(ExitKind::Data, args.output.display())
}

fn parse_noise(text: &str) -> Result<NoiseSpec, CliError> {
    let spec: NoiseSpec =
        serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid --noise {text:?}: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

/// Corrupts, denoises and scores every image of a manifest; the report goes to `out`.
pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = parse_noise(&args.noise)?;
    let state = load_model(&args.model)?;
    spec.check_channels(state.net.in_channels())?;
    let images = load_manifest(&args.manifest)?;
    let cfg = state.net.config();
    let label = args
        .label
        .clone()
        .unwrap_or_else(|| cell_label(cfg.variant, cfg.num_blocks));
    let report = evaluate(&state.net, &images, &spec, args.seed, &label)?;
    for row in &report.rows {
        if !row.skipped.is_empty() {
            eprintln!(
                "krnet: warning: skipped {} image(s) with a channel count the model cannot take: {}",
                row.skipped.len(),
                row.skipped.join(", ")
            );
        }
    }
    let bytes = if args.wall_time {
        report_render_timed(&report, args.format)
    } else {
        report_render(&report, args.format)
    };
    out.write_all(&bytes).context(ExitKind::Data, "cannot write to stdout")
}

/// Reads the `network` section of a run config, defaulting to the gray mini network.
fn gradcheck_network(path: Option<&Path>) -> Result<NetworkConfig, CliError> {
    let Some(path) = path else {
        return Ok(NetworkConfig::mini(1));
    };
    let text = read_config(path)?;
    let doc: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| CliError::config(format!("{}: expected a JSON object", path.display())))?;
    if let Some(key) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(CliError::config(format!("{}: unknown key {key:?}", path.display())));
    }
    match obj.get("network") {
        None => Ok(NetworkConfig::mini(1)),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| CliError::config(format!("{}: network: {e}", path.display()))),
    }
}

/// Runs the finite-difference checks and prints the worst relative error per
/// layer class. Returns whether every class is below the tolerance.
pub fn cmd_gradcheck(args: &GradcheckArgs, out: &mut dyn Write) -> Result<bool, CliError> {
    let opts = GradcheckOptions {
        network: gradcheck_network(args.config.as_deref())?,
        seed: args.seed,
        seeds: args.seeds,
        tolerance: args.tolerance,
        corrupt_backward: args.corrupt_backward,
    };
    opts.network.validate()?;
    let report = run_gradcheck(&opts)?;
    for c in &report.classes {
        let verdict = if c.worst_rel_err < report.tolerance { "ok" } else { "FAIL" };
        write_line(
            out,
            &format!(
                "{:<16} worst_rel_err={:.3e} entries={:<6} {verdict}",
                c.class.name(),
                c.worst_rel_err,
                c.entries
            ),
        )?;
    }
    let passed = report.passed();
    write_line(
        out,
        &format!(
            "{} over {} seeds at tolerance {:e}",
            if passed { "PASS" } else { "FAIL" },
            report.seeds,
            report.tolerance
        ),
    )?;
    Ok(passed)
}

/// Writes a deterministic synthetic corpus plus `manifest.txt`.
pub fn cmd_synth_data(args: &SynthArgs) -> Result<Vec<PathBuf>, CliError> {
    let (h, w) = args.size;
    Ok(write_synthetic_corpus(&args.out, args.count, h, w, args.channels, args.seed)?)
}

fn file_label(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Trains one network per (variant, block count) and compares them on the test set.
/// Writes `ablation.csv` and one `val_loss_<cell>.csv` per cell into `out_dir`.
pub fn cmd_ablation(args: &AblationArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    apply_overrides(&mut cfg, args.seed, args.epochs);
    cfg.validate()?;
    let val_path = cfg
        .data
        .val_manifest
        .clone()
        .ok_or_else(|| CliError::config("ablation needs data.val_manifest"))?;
    let test_path = cfg
        .data
        .test_manifest
        .clone()
        .ok_or_else(|| CliError::config("ablation needs data.test_manifest"))?;
    let channels = cfg.network.in_channels;
    let train_images: Vec<Image> = load_images(&cfg.data.train_manifest, channels)?
        .into_iter()
        .map(|l| l.image)
        .collect();
    let val = load_images(&val_path, channels)?;
    let test = load_images(&test_path, channels)?;
    let patches = crop_patches(
        &train_images,
        cfg.train.patch_size,
        cfg.data.count_per_image,
        &mut patch_rng(cfg.train.seed),
    )?;
    let blocks = if args.blocks.is_empty() {
        vec![cfg.network.num_blocks]
    } else {
        args.blocks.clone()
    };
    let data = AblationData {
        train_patches: &patches,
        val_images: &val,
        test_images: &test,
        noise: &cfg.noise,
    };
    let result = ablation_run(&cfg.network, &args.variants, &blocks, &cfg.train, &data)?;

    fs::create_dir_all(&cfg.out_dir).context(ExitKind::Data, cfg.out_dir.display())?;
    let csv = report_render(&result.report, krnet_core::ReportFormat::Csv);
    let path = cfg.out_dir.join("ablation.csv");
    fs::write(&path, csv).context(ExitKind::Data, path.display())?;
    for series in &result.series {
        let path = cfg.out_dir.join(format!("val_loss_{}.csv", file_label(&series.label)));
        fs::write(&path, series.to_csv()).context(ExitKind::Data, path.display())?;
    }
    out.write_all(&report_render(&result.report, krnet_core::ReportFormat::Text))
        .context(ExitKind::Data, "cannot write to stdout")
}
