use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel pairing inside a KR-block: the large unit runs first, the small one
/// consumes its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum KrBlockVariant {
    #[default]
    #[serde(rename = "KR7_3")]
    Kr73,
    #[serde(rename = "KR3_3")]
    Kr33,
    #[serde(rename = "KR7_7")]
    Kr77,
}

impl KrBlockVariant {
    pub const ALL: [KrBlockVariant; 3] = [Self::Kr73, Self::Kr33, Self::Kr77];

    /// `(large, small)` kernel sides.
    pub fn kernels(self) -> (usize, usize) {
        match self {
            Self::Kr73 => (7, 3),
            Self::Kr33 => (3, 3),
            Self::Kr77 => (7, 7),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Kr73 => "KR7-3",
            Self::Kr33 => "KR3-3",
            Self::Kr77 => "KR7-7",
        }
    }
}

impl std::fmt::Display for KrBlockVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Declarative description of a KRNET instance.
///
/// Defaults describe the full-size gray-scale network with four blocks.
/// `mini` relaxes the extraction-stage floor (`extract_kernel >= 7`,
/// `extract_filters >= 128`) for desk-scale experiments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub in_channels: usize,
    pub extract_filters: usize,
    pub extract_kernel: usize,
    pub shrink_channels: usize,
    pub block_channels_reduced: usize,
    pub num_blocks: usize,
    pub variant: KrBlockVariant,
    pub recon_filters: usize,
    pub mini: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            in_channels: 1,
            extract_filters: 128,
            extract_kernel: 7,
            shrink_channels: 64,
            block_channels_reduced: 64,
            num_blocks: 4,
            variant: KrBlockVariant::Kr73,
            recon_filters: 128,
            mini: false,
        }
    }
}

impl NetworkConfig {
    pub fn color() -> Self {
        Self {
            in_channels: 3,
            ..Self::default()
        }
    }

    /// Desk-scale network: 16 extraction filters of 5x5, 8-wide shrink, one block.
    pub fn mini(in_channels: usize) -> Self {
        Self {
            in_channels,
            extract_filters: 16,
            extract_kernel: 5,
            shrink_channels: 8,
            block_channels_reduced: 8,
            num_blocks: 1,
            variant: KrBlockVariant::Kr73,
            recon_filters: 16,
            mini: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(Error::Config(format!("{name}: {msg}")));
        if self.in_channels != 1 && self.in_channels != 3 {
            return field("in_channels", format!("must be 1 or 3, got {}", self.in_channels));
        }
        for (name, v) in [
            ("extract_filters", self.extract_filters),
            ("shrink_channels", self.shrink_channels),
            ("block_channels_reduced", self.block_channels_reduced),
            ("num_blocks", self.num_blocks),
            ("recon_filters", self.recon_filters),
        ] {
            if v == 0 {
                return field(name, "must be >= 1".into());
            }
        }
        if self.extract_kernel.is_multiple_of(2) {
            return field("extract_kernel", format!("must be odd, got {}", self.extract_kernel));
        }
        if !self.mini {
            if self.extract_kernel < 7 {
                return field(
                    "extract_kernel",
                    format!("must be >= 7 unless mini is set, got {}", self.extract_kernel),
                );
            }
            if self.extract_filters < 128 {
                return field(
                    "extract_filters",
                    format!("must be >= 128 unless mini is set, got {}", self.extract_filters),
                );
            }
        }
        Ok(())
    }

    /// Kernel sides along the longest serial path through the network.
    pub fn serial_kernels(&self) -> Vec<usize> {
        let (large, small) = self.variant.kernels();
        let mut ks = vec![self.extract_kernel, self.extract_kernel, 1];
        for _ in 0..self.num_blocks {
            ks.extend([1, large, small, 1]);
        }
        ks.extend([1, RECON_KERNEL, RECON_KERNEL]);
        ks
    }
}

pub(crate) const RECON_KERNEL: usize = 3;

/// Side of the input region that influences one output pixel, by the stride-1
/// composition rule `1 + Σ (k - 1)`.
pub fn receptive_field(config: &NetworkConfig) -> usize {
    receptive_field_of(&config.serial_kernels())
}

pub fn receptive_field_of(kernels: &[usize]) -> usize {
    1 + kernels.iter().map(|k| k.saturating_sub(1)).sum::<usize>()
}
