//! Deterministic synthetic clean images: smooth gradients, flat regions with
//! hard edges, and band-limited sinusoidal texture.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use super::image::{write_pnm, Image};
use super::rng::Rng;
use crate::error::Result;

enum Shape {
    Rect { y0: f64, x0: f64, y1: f64, x1: f64 },
    Disc { cy: f64, cx: f64, r: f64 },
}

impl Shape {
    fn contains(&self, y: f64, x: f64) -> bool {
        match *self {
            Shape::Rect { y0, x0, y1, x1 } => y >= y0 && y < y1 && x >= x0 && x < x1,
            Shape::Disc { cy, cx, r } => (y - cy).powi(2) + (x - cx).powi(2) < r * r,
        }
    }
}

pub fn synth_image(h: usize, w: usize, channels: usize, rng: &mut Rng) -> Result<Image> {
    let (hf, wf) = (h as f64, w as f64);
    // Per-channel tints keep colour images from being gray copies.
    let tint: Vec<f64> = (0..channels).map(|_| rng.uniform_range(0.6, 1.0)).collect();

    let base = rng.uniform_range(0.2, 0.6);
    let gy = rng.uniform_range(-0.3, 0.3);
    let gx = rng.uniform_range(-0.3, 0.3);

    let n_shapes = 2 + rng.below(3) as usize;
    let shapes: Vec<(Shape, Vec<f64>)> = (0..n_shapes)
        .map(|_| {
            let shape = if rng.uniform() < 0.5 {
                let y0 = rng.uniform_range(0.0, hf * 0.7);
                let x0 = rng.uniform_range(0.0, wf * 0.7);
                Shape::Rect {
                    y0,
                    x0,
                    y1: y0 + rng.uniform_range(hf * 0.15, hf * 0.5),
                    x1: x0 + rng.uniform_range(wf * 0.15, wf * 0.5),
                }
            } else {
                Shape::Disc {
                    cy: rng.uniform_range(0.0, hf),
                    cx: rng.uniform_range(0.0, wf),
                    r: rng.uniform_range(0.1, 0.35) * hf.min(wf),
                }
            };
            let level: Vec<f64> = (0..channels).map(|_| rng.uniform_range(0.05, 0.95)).collect();
            (shape, level)
        })
        .collect();

    // Frequencies stay well below Nyquist (at most one cycle per 4 pixels).
    let fy = rng.uniform_range(0.02, 0.25);
    let fx = rng.uniform_range(0.02, 0.25);
    let phase = rng.uniform_range(0.0, 2.0 * PI);
    let amp = rng.uniform_range(0.05, 0.15);
    let tex = Shape::Rect {
        y0: rng.uniform_range(0.0, hf * 0.5),
        x0: rng.uniform_range(0.0, wf * 0.5),
        y1: hf,
        x1: wf,
    };

    let mut values = vec![0.0; channels * h * w];
    for c in 0..channels {
        for y in 0..h {
            for x in 0..w {
                let (yf, xf) = (y as f64, x as f64);
                let mut v = base + gy * yf / hf + gx * xf / wf;
                for (shape, level) in &shapes {
                    if shape.contains(yf, xf) {
                        v = level[c];
                    }
                }
                if tex.contains(yf, xf) {
                    v += amp * (2.0 * PI * (fy * yf + fx * xf) + phase).sin();
                }
                values[(c * h + y) * w + x] = (v * tint[c]).clamp(0.0, 1.0);
            }
        }
    }
    Image::new(h, w, channels, values)
}

/// Writes `count` images as `img_NNNN.pgm`/`.ppm` plus `manifest.txt` into `dir`.
/// Returns the image paths in manifest order.
pub fn write_synthetic_corpus(
    dir: impl AsRef<Path>,
    count: usize,
    h: usize,
    w: usize,
    channels: usize,
    seed: u64,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let ext = if channels == 1 { "pgm" } else { "ppm" };
    let mut rng = Rng::new(seed);
    let mut manifest = String::new();
    let mut paths = Vec::with_capacity(count);
    for i in 0..count {
        let img = synth_image(h, w, channels, &mut rng)?;
        let name = format!("img_{i:04}.{ext}");
        let path = dir.join(&name);
        write_pnm(&img, &path)?;
        manifest.push_str(&name);
        manifest.push('\n');
        paths.push(path);
    }
    fs::write(dir.join("manifest.txt"), manifest)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn images_are_in_range_and_varied() {
        let mut rng = Rng::new(7);
        let img = synth_image(32, 32, 3, &mut rng).unwrap();
        assert!(img.values().iter().all(|v| (0.0..=1.0).contains(v)));
        let distinct: std::collections::BTreeSet<u64> =
            img.values().iter().map(|v| v.to_bits()).collect();
        assert!(distinct.len() > 50);
    }

    #[test]
    fn seeded() {
        let a = synth_image(16, 20, 1, &mut Rng::new(1)).unwrap();
        let b = synth_image(16, 20, 1, &mut Rng::new(1)).unwrap();
        assert_eq!(a, b);
    }
}
