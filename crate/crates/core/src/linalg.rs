//! Small dense complex vectors and matrices.
//!
//! Dimensions in this simulator are tiny (tens of elements), so everything is
//! a straightforward row-major loop.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

pub use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CVector(pub Vec<Complex64>);

impl CVector {
    pub fn zeros(n: usize) -> Self {
        CVector(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn conj(&self) -> CVector {
        CVector(self.0.iter().map(|z| z.conj()).collect())
    }

    pub fn scale(&self, s: f64) -> CVector {
        CVector(self.0.iter().map(|z| z * s).collect())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Bilinear product `Σ a_i b_i` (no conjugation).
    pub fn dot(&self, other: &CVector) -> Result<Complex64> {
        if self.len() != other.len() {
            return Err(Error::mismatch("dot", self.len(), other.len()));
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn add(&self, other: &CVector) -> Result<CVector> {
        if self.len() != other.len() {
            return Err(Error::mismatch("add", self.len(), other.len()));
        }
        Ok(CVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<usize> for CVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, c: usize) -> CVector {
        CVector((0..self.rows).map(|r| self[(r, c)]).collect())
    }

    pub fn row(&self, r: usize) -> CVector {
        CVector(self.data[r * self.cols..(r + 1) * self.cols].to_vec())
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn mul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::mismatch("matrix product", self.cols, other.rows));
        }
        Ok(CMatrix::from_fn(self.rows, other.cols, |r, c| {
            (0..self.cols).map(|k| self[(r, k)] * other[(k, c)]).sum()
        }))
    }

    /// Matrix-vector product `A x`.
    pub fn mul_vec(&self, x: &CVector) -> Result<CVector> {
        if self.cols != x.len() {
            return Err(Error::mismatch("matrix-vector product", self.cols, x.len()));
        }
        Ok(CVector(
            (0..self.rows)
                .map(|r| (0..self.cols).map(|k| self[(r, k)] * x[k]).sum())
                .collect(),
        ))
    }

    /// Row-vector product `xᵀ A` (no conjugation).
    pub fn left_mul_vec(&self, x: &CVector) -> Result<CVector> {
        if self.rows != x.len() {
            return Err(Error::mismatch("row-vector product", self.rows, x.len()));
        }
        Ok(CVector(
            (0..self.cols)
                .map(|c| (0..self.rows).map(|r| x[r] * self[(r, c)]).sum())
                .collect(),
        ))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Unit-modulus phasor `e^{jθ}`.
#[inline]
pub fn phasor(theta: f64) -> Complex64 {
    Complex64::new(crate::math::cos(theta), crate::math::sin(theta))
}
