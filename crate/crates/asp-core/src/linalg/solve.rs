//! Direct solves and inverse maintenance: Gaussian elimination with partial
//! pivoting, the rank-one inverse update, eigen-based pseudoinverses, and the
//! normal-equation and minimum-norm solvers.

use super::eigen::symmetric_eigendecompose;
use super::{DenseMatrix, DenseVector, LinearSystem};
use crate::error::{Error, Result};

/// Default denominator tolerance for the rank-one inverse update.
pub const DEFAULT_SM_TOL: f64 = 1e-12;

/// Default relative eigenvalue cutoff for pseudoinverses.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative eigenvalue ratio below which a Gram matrix is treated as
/// rank deficient by the normal-equation solver.
pub const RANK_RATIO_TOL: f64 = 1e-12;

/// Relative pivot threshold for elimination-based singularity detection.
const PIVOT_RTOL: f64 = 1e-13;

/// Solves a square system by Gaussian elimination with partial pivoting.
pub(crate) fn ge_solve(a: &DenseMatrix, b: &DenseVector) -> Result<DenseVector> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: n, found: a.cols() });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let mut m = a.clone();
    let mut rhs: Vec<f64> = b.as_slice().to_vec();
    let scale = m.max_abs();
    if scale == 0.0 {
        return Err(Error::RankDeficient { smallest: 0.0, largest: 0.0 });
    }

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().partial_cmp(&m[(j, col)].abs()).unwrap())
            .unwrap();
        let pivot = m[(pivot_row, col)];
        if pivot.abs() <= PIVOT_RTOL * scale {
            return Err(Error::RankDeficient { smallest: pivot.abs(), largest: scale });
        }
        if pivot_row != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot_row, j)];
                m[(pivot_row, j)] = tmp;
            }
            rhs.swap(col, pivot_row);
        }
        for row in (col + 1)..n {
            let factor = m[(row, col)] / m[(col, col)];
            if factor == 0.0 {
                continue;
            }
            m[(row, col)] = 0.0;
            for j in (col + 1)..n {
                m[(row, j)] -= factor * m[(col, j)];
            }
            rhs[row] -= factor * rhs[col];
        }
    }

    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in (row + 1)..n {
            acc -= m[(row, j)] * x[j];
        }
        x[row] = acc / m[(row, row)];
    }
    Ok(DenseVector::from_raw(x))
}

/// Dense inverse by column-wise elimination solves. Oracle-grade only; the
/// streaming paths maintain inverses by rank-one updates instead.
pub(crate) fn ge_invert(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    let mut out = DenseMatrix::zeros(n, n);
    let mut e = DenseVector::zeros(n);
    for col in 0..n {
        e[col] = 1.0;
        let x = ge_solve(a, &e)?;
        for row in 0..n {
            out[(row, col)] = x[row];
        }
        e[col] = 0.0;
    }
    Ok(out)
}

/// Rank-one inverse update with the default denominator tolerance.
///
/// Given the inverse `pinv` of some symmetric M, returns the inverse of
/// M + u u' as pinv - (pinv u)(pinv u)' / (1 + u' pinv u), symmetrised to
/// stop drift over long update chains. Cost O(n^2).
pub fn sherman_morrison_update(pinv: &DenseMatrix, u: &DenseVector) -> Result<DenseMatrix> {
    sherman_morrison_update_with_tolerance(pinv, u, DEFAULT_SM_TOL)
}

/// Rank-one inverse update with an explicit denominator tolerance.
pub fn sherman_morrison_update_with_tolerance(
    pinv: &DenseMatrix,
    u: &DenseVector,
    tol: f64,
) -> Result<DenseMatrix> {
    sherman_morrison_parts(pinv, u, tol).map(|(updated, _, _)| updated)
}

/// The update plus its intermediates (w = pinv u, denom = 1 + u'w).
///
/// Callers that need the post-update gain should take w / denom rather than
/// multiply the updated matrix by u: the two are algebraically identical
/// ((pinv - w w'/denom) u = w / denom), but the quotient form avoids the
/// matrix's subtraction noise, which matters when the maintained inverse
/// starts at the 1/delta scale.
pub(crate) fn sherman_morrison_parts(
    pinv: &DenseMatrix,
    u: &DenseVector,
    tol: f64,
) -> Result<(DenseMatrix, DenseVector, f64)> {
    if !pinv.is_square() {
        return Err(Error::DimensionMismatch { expected: pinv.rows(), found: pinv.cols() });
    }
    if u.len() != pinv.rows() {
        return Err(Error::DimensionMismatch { expected: pinv.rows(), found: u.len() });
    }
    pinv.check_symmetric()?;

    let w = pinv.matvec(u);
    let denom = 1.0 + u.dot(&w);
    if !(denom > tol) {
        return Err(Error::DenominatorNearZero { value: denom });
    }

    let n = u.len();
    let mut out = pinv.clone();
    for i in 0..n {
        let wi = w[i] / denom;
        for j in 0..n {
            out[(i, j)] -= wi * w[j];
        }
    }
    out.symmetrize();
    Ok((out, w, denom))
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix.
///
/// Eigenvalues above `rank_tol * lambda_max` are inverted; the rest are left
/// un-inverted (mapped to zero). An eigenvalue below the scaled negativity
/// threshold reports `NegativeEigenvalue`.
pub fn pinv_psd(s: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    let eig = symmetric_eigendecompose(s)?;
    let lambda_max = eig.max_eigenvalue().max(0.0);
    let neg_floor = -rank_tol * lambda_max.max(1.0);
    if eig.min_eigenvalue() < neg_floor {
        return Err(Error::NegativeEigenvalue { value: eig.min_eigenvalue() });
    }

    let cut = rank_tol * lambda_max;
    let n = s.rows();
    let q = &eig.eigenvectors;
    let inverted: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > cut { 1.0 / l } else { 0.0 })
        .collect();
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| q[(i, k)] * inverted[k] * q[(j, k)]).sum()
    }))
}

/// Least-squares solve through the normal equations A'A x = A'b.
///
/// Requires the Gram matrix to be numerically invertible (smallest eigenvalue
/// above `RANK_RATIO_TOL` times the largest); otherwise reports
/// `RankDeficient` and the caller should fall back to a pseudoinverse path.
pub fn solve_normal_equations(sys: &LinearSystem) -> Result<DenseVector> {
    let gram = sys.matrix().gram();
    let eig = symmetric_eigendecompose(&gram)?;
    let (largest, smallest) = (eig.max_eigenvalue(), eig.min_eigenvalue());
    if !(largest > 0.0) || smallest <= RANK_RATIO_TOL * largest {
        return Err(Error::RankDeficient { smallest, largest });
    }
    let rhs = sys.matrix().transpose_matvec(sys.observations());
    ge_solve(&gram, &rhs)
}

/// Applies the minimum-norm right inverse of a wide matrix: A'(AA')^{-1} v.
///
/// The result lies in the row space of A; when v = b this is the minimum-norm
/// solution of A x = b.
pub fn underdetermined_apply(a: &DenseMatrix, v: &DenseVector) -> Result<DenseVector> {
    if v.len() != a.rows() {
        return Err(Error::DimensionMismatch { expected: a.rows(), found: v.len() });
    }
    let mut w = DenseMatrix::zeros(a.rows(), a.rows());
    for i in 0..a.rows() {
        for j in i..a.rows() {
            let dot = a.row_slice(i).iter().zip(a.row_slice(j)).map(|(x, y)| x * y).sum();
            w[(i, j)] = dot;
            w[(j, i)] = dot;
        }
    }
    let y = ge_solve(&w, v)?;
    Ok(a.transpose_matvec(&y))
}
