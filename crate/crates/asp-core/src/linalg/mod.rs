//! Dense linear-algebra kernels: vectors, row-major matrices, rank-one
//! inverse updates, symmetric eigendecomposition, pseudoinverses, and the
//! direct least-squares solves used as oracles elsewhere in the crate.
//!
//! Everything here is plain `f64` at desk scale (n well below a few hundred).
//! Values are immutable after construction and all operations are pure
//! functions, so the module is safe to use from any number of threads.

mod eigen;
mod solve;

pub use eigen::{symmetric_eigendecompose, EigenDecomposition};
pub use solve::{
    pinv_psd, sherman_morrison_update, sherman_morrison_update_with_tolerance,
    solve_normal_equations, underdetermined_apply, DEFAULT_RANK_TOL, DEFAULT_SM_TOL,
    RANK_RATIO_TOL,
};

pub(crate) use solve::{ge_invert, ge_solve, sherman_morrison_parts};

use crate::error::{Error, Result};
use std::ops::{Index, IndexMut};

/// Relative tolerance for the per-entry symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A dense real vector. Entries are validated finite on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    /// Builds a vector from raw entries, rejecting NaN/Inf and zero length.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { data })
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "vector length must be at least 1");
        Self { data: vec![0.0; n] }
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        assert!(n >= 1, "vector length must be at least 1");
        Self { data: (0..n).map(f).collect() }
    }

    /// Internal constructor for arithmetic results; skips the finiteness
    /// check so that divergent iterations remain representable.
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        Self { data }
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

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "dot of mismatched lengths");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// self + c * other, in place.
    pub fn add_scaled(&mut self, c: f64, other: &Self) {
        assert_eq!(self.len(), other.len(), "axpy of mismatched lengths");
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += c * y;
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_raw(self.data.iter().map(|x| c * x).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "sub of mismatched lengths");
        Self::from_raw(self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "add of mismatched lengths");
        Self::from_raw(self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "diff of mismatched lengths");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Concatenates two vectors; used to assemble augmented-state rows.
    pub fn concat(&self, other: &Self) -> Self {
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::from_raw(data)
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

/// A dense row-major real matrix. Entries are validated finite on
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested row slices; rows must share one length.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: 0 });
        }
        Self::new(m, n, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be at least 1");
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Scaled identity, the usual seed for maintained inverses.
    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row_slice(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row(&self, i: usize) -> DenseVector {
        DenseVector::from_raw(self.row_slice(i).to_vec())
    }

    pub fn matvec(&self, v: &DenseVector) -> DenseVector {
        assert_eq!(self.cols, v.len(), "matvec of mismatched dimensions");
        DenseVector::from_raw(
            (0..self.rows)
                .map(|i| self.row_slice(i).iter().zip(v.iter()).map(|(a, x)| a * x).sum())
                .collect(),
        )
    }

    /// A' v without materialising the transpose.
    pub fn transpose_matvec(&self, v: &DenseVector) -> DenseVector {
        assert_eq!(self.rows, v.len(), "transpose matvec of mismatched dimensions");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (j, a) in self.row_slice(i).iter().enumerate() {
                out[j] += a * vi;
            }
        }
        DenseVector::from_raw(out)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul of mismatched dimensions");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    /// A'A, symmetrised exactly.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..self.rows {
            let row = self.row_slice(i);
            for p in 0..n {
                let rp = row[p];
                if rp == 0.0 {
                    continue;
                }
                for q in p..n {
                    g[(p, q)] += rp * row[q];
                }
            }
        }
        for p in 0..n {
            for q in (p + 1)..n {
                g[(q, p)] = g[(p, q)];
            }
        }
        g
    }

    /// u v' as a matrix.
    pub fn outer(u: &DenseVector, v: &DenseVector) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let data = self.data.iter().map(|x| c * x).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Worst violation of `|S[i][j] - S[j][i]| <= tol * max(1, |S[i][j]|)`,
    /// expressed as a ratio against that bound. At most 1.0 means symmetric.
    pub fn symmetry_violation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let gap = (self[(i, j)] - self[(j, i)]).abs();
                let scale = SYMMETRY_TOL * self[(i, j)].abs().max(1.0);
                worst = worst.max(gap / scale);
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry_violation() <= 1.0
    }

    pub(crate) fn check_symmetric(&self) -> Result<()> {
        let v = self.symmetry_violation();
        if v > 1.0 {
            Err(Error::NotSymmetric { max_asymmetry: v * SYMMETRY_TOL })
        } else {
            Ok(())
        }
    }

    /// Replaces the matrix by (M + M')/2. Stops symmetry drift over long
    /// rank-one update chains.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square(), "symmetrize of a non-square matrix");
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// The data matrix and observation vector of one identification problem.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    a: DenseMatrix,
    b: DenseVector,
}

impl LinearSystem {
    pub fn new(a: DenseMatrix, b: DenseVector) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::DimensionMismatch { expected: a.rows(), found: b.len() });
        }
        Ok(Self { a, b })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn observations(&self) -> &DenseVector {
        &self.b
    }

    /// Number of data rows.
    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    /// Number of unknowns.
    pub fn unknowns(&self) -> usize {
        self.a.cols()
    }

    pub fn row(&self, i: usize) -> (DenseVector, f64) {
        (self.a.row(i), self.b[i])
    }
}
