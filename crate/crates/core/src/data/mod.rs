//! Image I/O, patch extraction, seeded randomness and noise synthesis.

mod image;
mod manifest;
mod noise;
mod patches;
mod rng;
pub mod synth;

pub use image::{decode_pnm, encode_pnm, quantize, read_pnm, write_pnm, Image};
pub use manifest::{load_manifest, read_manifest, LabeledImage};
pub use noise::{add_noise, NoiseSpec, NoisyImage};
pub use patches::{batch_iter, crop_patches, BatchIter, Patch, PatchSet};
pub use rng::{Rng, RngState};
