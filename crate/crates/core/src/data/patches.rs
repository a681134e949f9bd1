use std::collections::BTreeMap;

use super::image::Image;
use super::noise::{add_noise_with_sigmas, NoiseSpec};
use super::rng::Rng;
use crate::error::{Error, Result};
use crate::tensor::{Shape4, Tensor4};

#[derive(Debug, Clone)]
pub struct Patch {
    pub image: Image,
    pub source: usize,
    pub top: usize,
    pub left: usize,
}

/// Clean training patches. Every patch lies fully inside its source image.
#[derive(Debug, Clone)]
pub struct PatchSet {
    pub patches: Vec<Patch>,
    pub patch_size: usize,
    /// Indices of source images too small to yield a patch.
    pub skipped: Vec<usize>,
}

impl PatchSet {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.patches.first().map_or(0, |p| p.image.channels())
    }
}

/// Crops `count_per_image` uniformly placed windows from each image.
/// Images smaller than the patch are skipped; only an empty result is an error.
pub fn crop_patches(
    images: &[Image],
    patch_size: usize,
    count_per_image: usize,
    rng: &mut Rng,
) -> Result<PatchSet> {
    if patch_size == 0 {
        return Err(Error::Argument("patch_size must be >= 1".into()));
    }
    let mut patches = Vec::with_capacity(images.len() * count_per_image);
    let mut skipped = Vec::new();
    for (source, img) in images.iter().enumerate() {
        if img.h() < patch_size || img.w() < patch_size {
            skipped.push(source);
            continue;
        }
        for _ in 0..count_per_image {
            let top = rng.below((img.h() - patch_size + 1) as u64) as usize;
            let left = rng.below((img.w() - patch_size + 1) as u64) as usize;
            patches.push(Patch {
                image: img.crop(top, left, patch_size)?,
                source,
                top,
                left,
            });
        }
    }
    if patches.is_empty() {
        return Err(Error::Data(format!(
            "no {patch_size}x{patch_size} patches could be cropped ({} images skipped)",
            skipped.len()
        )));
    }
    if let Some(c) = patches.iter().map(|p| p.image.channels()).find(|&c| c != patches[0].image.channels()) {
        return Err(Error::Data(format!("mixed channel counts in patch set ({c} vs {})", patches[0].image.channels())));
    }
    Ok(PatchSet {
        patches,
        patch_size,
        skipped,
    })
}

/// One epoch of `(noisy, clean)` NCHW batches.
///
/// Construction shuffles the patch order and, for blind per-image noise, draws
/// each source image's σs. Noise is then drawn batch by batch as the iterator
/// advances, so the draw order is the serial order.
pub struct BatchIter<'a> {
    patches: &'a PatchSet,
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
    spec: &'a NoiseSpec,
    source_sigmas: BTreeMap<usize, Vec<f64>>,
    rng: &'a mut Rng,
}

pub fn batch_iter<'a>(
    patches: &'a PatchSet,
    spec: &'a NoiseSpec,
    batch_size: usize,
    rng: &'a mut Rng,
) -> Result<BatchIter<'a>> {
    if patches.is_empty() {
        return Err(Error::Data("empty patch set".into()));
    }
    if batch_size == 0 {
        return Err(Error::Argument("batch_size must be >= 1".into()));
    }
    let channels = patches.channels();
    spec.check_channels(channels)?;
    let mut order: Vec<usize> = (0..patches.len()).collect();
    rng.shuffle(&mut order);
    let mut source_sigmas = BTreeMap::new();
    if let NoiseSpec::Blind { per_patch: false, .. } = spec {
        let sources: std::collections::BTreeSet<usize> =
            patches.patches.iter().map(|p| p.source).collect();
        for s in sources {
            source_sigmas.insert(s, spec.draw_sigmas(channels, rng)?);
        }
    }
    Ok(BatchIter {
        patches,
        order,
        batch_size,
        pos: 0,
        spec,
        source_sigmas,
        rng,
    })
}

impl BatchIter<'_> {
    pub fn num_batches(&self) -> usize {
        self.order.len().div_ceil(self.batch_size)
    }
}

impl Iterator for BatchIter<'_> {
    type Item = (Tensor4, Tensor4);

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let idx = &self.order[self.pos..end];
        self.pos = end;
        let first = &self.patches.patches[idx[0]].image;
        let shape = Shape4::new(idx.len(), first.channels(), first.h(), first.w());
        let mut clean = Vec::with_capacity(idx.len() * first.values().len());
        let mut noisy = Vec::with_capacity(clean.capacity());
        for &i in idx {
            let patch = &self.patches.patches[i];
            let sigmas = match self.source_sigmas.get(&patch.source) {
                Some(s) => s.clone(),
                None => self
                    .spec
                    .draw_sigmas(patch.image.channels(), self.rng)
                    .expect("spec validated against channel count"),
            };
            let y = add_noise_with_sigmas(&patch.image, &sigmas, self.rng);
            clean.extend_from_slice(patch.image.values());
            noisy.extend_from_slice(y.values());
        }
        Some((
            Tensor4::from_vec(shape, noisy).expect("patch shapes are uniform"),
            Tensor4::from_vec(shape, clean).expect("patch shapes are uniform"),
        ))
    }
}
