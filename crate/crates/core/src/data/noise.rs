use serde::{Deserialize, Serialize};

use super::image::Image;
use super::rng::Rng;
use crate::error::{Error, Result};

/// Corruption process. All σ values are on the 0–255 scale and divided by
/// 255 before being applied to unit-scale images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum NoiseSpec {
    /// One σ for every channel.
    #[serde(rename = "awgn")]
    Awgn { sigma: f64 },
    /// Independent σ per RGB channel.
    #[serde(rename = "mc")]
    MultiChannel {
        sigma_r: f64,
        sigma_g: f64,
        sigma_b: f64,
    },
    /// σ drawn uniformly from `[lo, hi]` per channel. Draws are per source
    /// image unless `per_patch` is set.
    #[serde(rename = "blind")]
    Blind {
        #[serde(default)]
        lo: f64,
        #[serde(default = "default_blind_hi")]
        hi: f64,
        #[serde(default)]
        per_patch: bool,
    },
}

fn default_blind_hi() -> f64 {
    55.0
}

impl NoiseSpec {
    pub fn awgn(sigma: f64) -> Self {
        Self::Awgn { sigma }
    }

    pub fn blind() -> Self {
        Self::Blind {
            lo: 0.0,
            hi: default_blind_hi(),
            per_patch: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        let valid = match *self {
            Self::Awgn { sigma } => ok(sigma),
            Self::MultiChannel {
                sigma_r,
                sigma_g,
                sigma_b,
            } => ok(sigma_r) && ok(sigma_g) && ok(sigma_b),
            Self::Blind { lo, hi, .. } => ok(lo) && ok(hi) && lo <= hi,
        };
        if !valid {
            return Err(Error::Spec(format!("invalid noise parameters in {self}")));
        }
        Ok(())
    }

    pub fn check_channels(&self, channels: usize) -> Result<()> {
        self.validate()?;
        if matches!(self, Self::MultiChannel { .. }) && channels != 3 {
            return Err(Error::Spec(format!(
                "multi-channel noise needs a 3-channel image, got {channels}"
            )));
        }
        Ok(())
    }

    pub fn is_blind(&self) -> bool {
        matches!(self, Self::Blind { .. })
    }

    /// Draws the per-channel σs (0–255 scale) for one image.
    pub fn draw_sigmas(&self, channels: usize, rng: &mut Rng) -> Result<Vec<f64>> {
        self.check_channels(channels)?;
        Ok(match *self {
            Self::Awgn { sigma } => vec![sigma; channels],
            Self::MultiChannel {
                sigma_r,
                sigma_g,
                sigma_b,
            } => vec![sigma_r, sigma_g, sigma_b],
            Self::Blind { lo, hi, .. } => (0..channels).map(|_| rng.uniform_range(lo, hi)).collect(),
        })
    }
}

impl std::fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Awgn { sigma } => write!(f, "sigma={sigma}"),
            Self::MultiChannel {
                sigma_r,
                sigma_g,
                sigma_b,
            } => write!(f, "mc({sigma_r},{sigma_g},{sigma_b})"),
            Self::Blind { lo, hi, .. } => write!(f, "blind[{lo},{hi}]"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoisyImage {
    pub image: Image,
    /// σ actually applied to each channel, on the 0–255 scale.
    pub sigmas: Vec<f64>,
}

/// `y = x + η` with `η ~ N(0, (σ_c / 255)^2)` i.i.d. per element. No clipping.
pub fn add_noise(clean: &Image, spec: &NoiseSpec, rng: &mut Rng) -> Result<NoisyImage> {
    let sigmas = spec.draw_sigmas(clean.channels(), rng)?;
    Ok(NoisyImage {
        image: add_noise_with_sigmas(clean, &sigmas, rng),
        sigmas,
    })
}

pub(crate) fn add_noise_with_sigmas(clean: &Image, sigmas: &[f64], rng: &mut Rng) -> Image {
    let mut noisy = clean.clone();
    let plane = clean.h() * clean.w();
    for (chunk, &sigma) in noisy.values_mut().chunks_mut(plane).zip(sigmas) {
        let s = sigma / 255.0;
        for v in chunk {
            *v += s * rng.gaussian();
        }
    }
    noisy
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_exact() {
        let clean = Image::new(4, 4, 1, (0..16).map(|i| i as f64 / 15.0).collect()).unwrap();
        let noisy = add_noise(&clean, &NoiseSpec::awgn(0.0), &mut Rng::new(1)).unwrap();
        assert_eq!(noisy.image, clean);
    }

    #[test]
    fn noise_is_exactly_additive() {
        let clean = Image::filled(8, 8, 3, 0.5).unwrap();
        let spec = NoiseSpec::MultiChannel {
            sigma_r: 40.0,
            sigma_g: 20.0,
            sigma_b: 30.0,
        };
        let noisy = add_noise(&clean, &spec, &mut Rng::new(4)).unwrap();
        let mut rng = Rng::new(4);
        for (c, &s) in [40.0, 20.0, 30.0].iter().enumerate() {
            for (y, x) in noisy.image.channel(c).iter().zip(clean.channel(c)) {
                assert_eq!(y - x, (x + s / 255.0 * rng.gaussian()) - x);
            }
        }
    }

    #[test]
    fn multichannel_on_gray_is_spec_error() {
        let clean = Image::filled(2, 2, 1, 0.5).unwrap();
        let spec = NoiseSpec::MultiChannel {
            sigma_r: 1.0,
            sigma_g: 1.0,
            sigma_b: 1.0,
        };
        assert!(matches!(add_noise(&clean, &spec, &mut Rng::new(0)), Err(Error::Spec(_))));
    }

    #[test]
    fn blind_reports_drawn_sigmas() {
        let clean = Image::filled(2, 2, 3, 0.5).unwrap();
        let n = add_noise(&clean, &NoiseSpec::blind(), &mut Rng::new(8)).unwrap();
        assert_eq!(n.sigmas.len(), 3);
        assert!(n.sigmas.iter().all(|s| (0.0..=55.0).contains(s)));
    }

    #[test]
    fn json_forms() {
        let a: NoiseSpec = serde_json::from_str(r#"{"kind":"awgn","sigma":25}"#).unwrap();
        assert_eq!(a, NoiseSpec::awgn(25.0));
        let b: NoiseSpec = serde_json::from_str(r#"{"kind":"blind"}"#).unwrap();
        assert_eq!(b, NoiseSpec::blind());
        let m: NoiseSpec =
            serde_json::from_str(r#"{"kind":"mc","sigma_r":40,"sigma_g":20,"sigma_b":30}"#).unwrap();
        assert!(matches!(m, NoiseSpec::MultiChannel { .. }));
        assert!(serde_json::from_str::<NoiseSpec>(r#"{"kind":"awgn","sigma":1,"extra":2}"#).is_err());
        assert!(NoiseSpec::Blind { lo: 5.0, hi: 1.0, per_patch: false }.validate().is_err());
        assert!(NoiseSpec::awgn(-1.0).validate().is_err());
    }
}
