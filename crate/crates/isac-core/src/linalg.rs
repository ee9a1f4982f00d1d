//! Small dense complex-matrix helpers.
//!
//! The signal blocks in this crate are tiny (tens of rows, up to ~1000
//! columns), so a plain column-major buffer with the handful of products the
//! estimators and bounds actually need beats pulling in a linear-algebra
//! dependency.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex;

pub type C64 = Complex<f64>;

/// Column-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Builds a matrix from column slices; all columns must share one length.
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols.len());
        for c in cols {
            assert_eq!(c.len(), rows, "ragged columns");
            data.extend_from_slice(c);
        }
        Self {
            rows,
            cols: cols.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// `self * other^H`; requires matching column counts, yields
    /// `self.rows x other.rows`.
    pub fn mul_bh(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.cols, "inner dimensions differ");
        let mut out = CMat::zeros(self.rows, other.rows);
        for t in 0..self.cols {
            let a = self.col(t);
            let b = other.col(t);
            for (j, &bj) in b.iter().enumerate() {
                let w = bj.conj();
                let o = out.col_mut(j);
                for (oi, &ai) in o.iter_mut().zip(a.iter()) {
                    *oi += ai * w;
                }
            }
        }
        out
    }

    /// Entrywise sum with another matrix of the same shape.
    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (o, &b) in out.data.iter_mut().zip(other.data.iter()) {
            *o += b;
        }
        out
    }

    pub fn scale(&self, s: C64) -> CMat {
        let mut out = self.clone();
        for o in out.data.iter_mut() {
            *o *= s;
        }
        out
    }

    /// Squared Frobenius norm.
    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// `tr(A B^H)` as the entrywise sum `sum_ij A_ij conj(B_ij)`.
pub fn frob_inner(a: &CMat, b: &CMat) -> C64 {
    assert_eq!((a.rows, a.cols), (b.rows, b.cols));
    a.data
        .iter()
        .zip(b.data.iter())
        .map(|(&x, &y)| x * y.conj())
        .sum()
}

/// Conjugate-linear inner product `a^H b`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(&x, &y)| x.conj() * y).sum()
}

/// Squared Euclidean norm of a complex vector.
pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Quadratic form `a^H M b` without materializing `M b`.
pub fn sandwich(a: &[C64], m: &CMat, b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), m.rows());
    debug_assert_eq!(b.len(), m.cols());
    let mut acc = C64::new(0.0, 0.0);
    for (j, &bj) in b.iter().enumerate() {
        acc += inner(a, m.col(j)) * bj;
    }
    acc
}
