use std::fs;
use std::path::{Path, PathBuf};

use krnet_core::{NetworkConfig, NoiseSpec, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Top-level JSON document driving `train` and `ablation`.
///
/// Relative paths (manifests, `out_dir`) are resolved against the directory
/// holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    pub data: DataConfig,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub train_manifest: PathBuf,
    #[serde(default)]
    pub val_manifest: Option<PathBuf>,
    #[serde(default)]
    pub test_manifest: Option<PathBuf>,
    /// Random crops taken from every training image.
    #[serde(default = "default_count_per_image")]
    pub count_per_image: usize,
}

fn default_noise() -> NoiseSpec {
    NoiseSpec::awgn(25.0)
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_count_per_image() -> usize {
    100
}

/// Top-level keys a run config may contain.
pub const KEYS: [&str; 5] = ["network", "train", "noise", "data", "out_dir"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_config(path)?;
        let mut cfg = Self::parse(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.data.train_manifest);
        cfg.data.val_manifest.as_mut().map(resolve);
        cfg.data.test_manifest.as_mut().map(resolve);
        resolve(&mut cfg.out_dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.network.validate()?;
        self.train.validate(&self.network)?;
        self.noise.validate()?;
        self.noise.check_channels(self.network.in_channels)?;
        if self.data.count_per_image == 0 {
            return Err(CliError::config("data.count_per_image must be >= 1"));
        }
        Ok(())
    }
}

pub(crate) fn read_config(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_optional_keys() {
        let cfg = RunConfig::parse(r#"{"data": {"train_manifest": "m.txt"}}"#).unwrap();
        assert_eq!(cfg.network, NetworkConfig::default());
        assert_eq!(cfg.train, TrainConfig::default());
        assert_eq!(cfg.noise, NoiseSpec::awgn(25.0));
        assert_eq!(cfg.data.count_per_image, 100);
        assert_eq!(cfg.data.val_manifest, None);
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for doc in [
            r#"{"data": {"train_manifest": "m"}, "extra": 1}"#,
            r#"{"data": {"train_manifest": "m", "shuffle": true}}"#,
            r#"{"data": {"train_manifest": "m"}, "train": {"learning_rate": 0.1}}"#,
            r#"{"data": {"train_manifest": "m"}, "network": {"blocks": 2}}"#,
            r#"{"data": {"train_manifest": "m"}, "noise": {"kind": "awgn", "sigma": 1, "mu": 0}}"#,
        ] {
            assert!(RunConfig::parse(doc).is_err(), "{doc}");
        }
    }

    #[test]
    fn missing_required_keys_are_named() {
        let e = RunConfig::parse("{}").unwrap_err();
        assert!(e.message().contains("data"), "{e}");
        let e = RunConfig::parse(r#"{"data": {}}"#).unwrap_err();
        assert!(e.message().contains("train_manifest"), "{e}");
    }

    #[test]
    fn noise_kinds_parse() {
        let cfg = RunConfig::parse(
            r#"{"data": {"train_manifest": "m"}, "noise": {"kind": "mc", "sigma_r": 40, "sigma_g": 20, "sigma_b": 30}}"#,
        )
        .unwrap();
        assert!(matches!(cfg.noise, NoiseSpec::MultiChannel { .. }));
        let cfg = RunConfig::parse(r#"{"data": {"train_manifest": "m"}, "noise": {"kind": "blind"}}"#).unwrap();
        assert_eq!(cfg.noise, NoiseSpec::blind());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"data": {"train_manifest": "m.txt", "test_manifest": "/abs/t.txt"}}"#).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.data.train_manifest, dir.path().join("m.txt"));
        assert_eq!(cfg.data.test_manifest, Some(PathBuf::from("/abs/t.txt")));
        assert_eq!(cfg.out_dir, dir.path().join("out"));
    }
}
