//! Planar floating-point images and binary Netpbm (P5/P6, maxval 255) I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, PnmError, Result};
use crate::tensor::{Shape4, Tensor4};

/// An image stored channel-planar as `(c, h, w)`. Clean images hold values in
/// `[0, 1]`; noisy images may leave that range.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    h: usize,
    w: usize,
    channels: usize,
    values: Vec<f64>,
}

impl Image {
    pub fn new(h: usize, w: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(Error::Size(format!("image dimensions must be >= 1, got {h}x{w}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Config(format!("images have 1 or 3 channels, got {channels}")));
        }
        if values.len() != h * w * channels {
            return Err(Error::Shape(format!(
                "{} values for a {channels}x{h}x{w} image",
                values.len()
            )));
        }
        Ok(Self { h, w, channels, values })
    }

    pub fn filled(h: usize, w: usize, channels: usize, v: f64) -> Result<Self> {
        Self::new(h, w, channels, vec![v; h * w * channels])
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * self.h * self.w..(c + 1) * self.h * self.w]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.values[(c * self.h + y) * self.w + x]
    }

    /// Copies the `size`x`size` window at `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, size: usize) -> Result<Image> {
        if top + size > self.h || left + size > self.w {
            return Err(Error::Shape(format!(
                "crop {size}x{size} at ({top},{left}) exceeds {}x{}",
                self.h, self.w
            )));
        }
        let mut values = Vec::with_capacity(size * size * self.channels);
        for c in 0..self.channels {
            for y in top..top + size {
                let start = (c * self.h + y) * self.w + left;
                values.extend_from_slice(&self.values[start..start + size]);
            }
        }
        Image::new(size, size, self.channels, values)
    }

    pub fn clipped(&self) -> Image {
        Image {
            values: self.values.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            ..self.clone()
        }
    }

    /// As a single-sample `(1, c, h, w)` tensor.
    pub fn to_tensor(&self) -> Tensor4 {
        Tensor4::from_vec(Shape4::new(1, self.channels, self.h, self.w), self.values.clone())
            .expect("image dimensions are validated on construction")
    }

    /// Converts sample 0 of `t` back into an image.
    pub fn from_tensor(t: &Tensor4) -> Result<Image> {
        let per = t.c() * t.shape().plane();
        Image::new(t.h(), t.w(), t.c(), t.as_slice()[..per].to_vec())
    }

    /// Quantizes to interleaved 8-bit samples: `round(clamp(v, 0, 1) * 255)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let plane = self.h * self.w;
        let mut out = Vec::with_capacity(plane * self.channels);
        for i in 0..plane {
            for c in 0..self.channels {
                out.push(quantize(self.values[c * plane + i]));
            }
        }
        out
    }

    pub fn from_bytes(h: usize, w: usize, channels: usize, bytes: &[u8]) -> Result<Image> {
        let plane = h * w;
        let mut values = vec![0.0; plane * channels];
        for (i, px) in bytes.chunks(channels).enumerate().take(plane) {
            for (c, &b) in px.iter().enumerate() {
                values[c * plane + i] = b as f64 / 255.0;
            }
        }
        Image::new(h, w, channels, values)
    }
}

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Parses a binary P5 (gray) or P6 (RGB) file with maxval 255.
pub fn decode_pnm(data: &[u8]) -> Result<Image> {
    let magic = data.get(..2).unwrap_or(data);
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(PnmError::BadMagic(String::from_utf8_lossy(magic).into_owned()).into()),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for (i, field) in fields.iter_mut().enumerate() {
        // Whitespace and `#` comments may separate header tokens.
        loop {
            match data.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while data.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(PnmError::Header(format!("missing header field {}", i + 1)).into()),
            }
        }
        let start = pos;
        while data.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        let token = std::str::from_utf8(&data[start..pos]).unwrap_or_default();
        *field = token.parse().map_err(|_| {
            PnmError::Header(format!("header field {} is not a number", i + 1))
        })?;
    }
    match data.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(PnmError::Header("no whitespace after maxval".into()).into()),
    }
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(PnmError::BadMaxval(maxval).into());
    }
    if w == 0 || h == 0 {
        return Err(PnmError::Header(format!("zero-sized image {w}x{h}")).into());
    }
    let (w, h) = (w as usize, h as usize);
    let expected = w * h * channels;
    let payload = &data[pos..];
    if payload.len() < expected {
        return Err(PnmError::Truncated {
            expected,
            found: payload.len(),
        }
        .into());
    }
    Image::from_bytes(h, w, channels, &payload[..expected])
}

/// Canonical encoding: `P5\n<w> <h>\n255\n` (or `P6`) followed by the samples.
pub fn encode_pnm(image: &Image) -> Vec<u8> {
    let magic = if image.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.w, image.h).into_bytes();
    out.extend(image.to_bytes());
    out
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<Image> {
    decode_pnm(&fs::read(path)?)
}

pub fn write_pnm(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pnm(image))?;
    Ok(())
}
