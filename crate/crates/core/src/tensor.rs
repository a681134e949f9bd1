//! Dense 4-D arrays in `(n, c, h, w)` row-major order.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape4 {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape4 {
    pub const fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self { n, c, h, w }
    }

    /// Total element count, or a size error if the product overflows.
    pub fn numel(&self) -> Result<usize> {
        self.n
            .checked_mul(self.c)
            .and_then(|v| v.checked_mul(self.h))
            .and_then(|v| v.checked_mul(self.w))
            .ok_or_else(|| Error::Size(format!("{self} overflows usize")))
    }

    pub fn plane(&self) -> usize {
        self.h * self.w
    }
}

impl std::fmt::Display for Shape4 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}x{}", self.n, self.c, self.h, self.w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    shape: Shape4,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(shape: Shape4) -> Result<Self> {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: Shape4, value: f64) -> Result<Self> {
        check_dims(shape)?;
        Ok(Self {
            data: vec![value; shape.numel()?],
            shape,
        })
    }

    pub fn from_vec(shape: Shape4, data: Vec<f64>) -> Result<Self> {
        check_dims(shape)?;
        let numel = shape.numel()?;
        if data.len() != numel {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {shape} tensor ({numel} expected)",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_fn(shape: Shape4, mut f: impl FnMut(usize) -> f64) -> Result<Self> {
        check_dims(shape)?;
        let data = (0..shape.numel()?).map(&mut f).collect();
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> Shape4 {
        self.shape
    }

    pub fn n(&self) -> usize {
        self.shape.n
    }

    pub fn c(&self) -> usize {
        self.shape.c
    }

    pub fn h(&self) -> usize {
        self.shape.h
    }

    pub fn w(&self) -> usize {
        self.shape.w
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn index(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        ((n * self.shape.c + c) * self.shape.h + y) * self.shape.w + x
    }

    pub fn get(&self, n: usize, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.index(n, c, y, x)]
    }

    pub fn set(&mut self, n: usize, c: usize, y: usize, x: usize, v: f64) {
        let i = self.index(n, c, y, x);
        self.data[i] = v;
    }

    /// The `h*w` plane of sample `n`, channel `c`.
    pub fn plane(&self, n: usize, c: usize) -> &[f64] {
        let p = self.shape.plane();
        let start = (n * self.shape.c + c) * p;
        &self.data[start..start + p]
    }

    pub fn dot(&self, other: &Tensor4) -> Result<f64> {
        self.expect_shape(other.shape, "dot")?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor4 {
        Tensor4 {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn expect_shape(&self, shape: Shape4, what: &str) -> Result<()> {
        if self.shape != shape {
            return Err(Error::Shape(format!(
                "{what}: expected {shape}, found {}",
                self.shape
            )));
        }
        Ok(())
    }

    /// Splits the batch into single-sample tensors.
    pub fn split_batch(&self) -> Vec<Tensor4> {
        let s = self.shape;
        let stride = s.c * s.plane();
        self.data
            .chunks(stride)
            .map(|chunk| Tensor4 {
                shape: Shape4::new(1, s.c, s.h, s.w),
                data: chunk.to_vec(),
            })
            .collect()
    }
}

fn check_dims(shape: Shape4) -> Result<()> {
    if shape.n == 0 || shape.c == 0 || shape.h == 0 || shape.w == 0 {
        return Err(Error::Size(format!("all dimensions must be >= 1, got {shape}")));
    }
    Ok(())
}
