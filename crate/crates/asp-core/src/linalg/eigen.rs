//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use super::{DenseMatrix, DenseVector};
use crate::error::Result;

/// Sweep cap for the cyclic Jacobi iteration. Convergence is quadratic once
/// the off-diagonal mass is small; desk-scale matrices settle in well under
/// ten sweeps.
const MAX_SWEEPS: usize = 100;

/// Convergence threshold relative to the Frobenius norm of the input.
const OFFDIAG_TOL: f64 = 1e-12;

/// Eigenvalues sorted descending, paired with orthonormal eigenvector
/// columns: `eigenvectors` column i belongs to `eigenvalues[i]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: DenseVector,
    pub eigenvectors: DenseMatrix,
}

impl EigenDecomposition {
    /// Q diag(lambda) Q', mainly for reconstruction checks.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        DenseMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| q[(i, k)] * self.eigenvalues[k] * q[(j, k)]).sum()
        })
    }

    /// Largest eigenvalue (first, by the descending sort).
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }
}

/// Diagonalises a symmetric matrix with cyclic Jacobi rotations.
///
/// Fails with `NotSymmetric` when the input violates the per-entry symmetry
/// tolerance. Eigenvalues come back sorted descending with matching
/// eigenvector columns.
pub fn symmetric_eigendecompose(s: &DenseMatrix) -> Result<EigenDecomposition> {
    s.check_symmetric()?;
    let n = s.rows();

    let mut a = s.clone();
    let mut q = DenseMatrix::identity(n);
    let tol = OFFDIAG_TOL * s.frobenius_norm();

    for _sweep in 0..MAX_SWEEPS {
        if offdiag_norm(&a) <= tol {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for r in (p + 1)..n {
                let apq = a[(p, r)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(&mut a, &mut q, p, r, c, sn);
            }
        }
    }

    // Sort eigenpairs by descending eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());

    let eigenvalues = DenseVector::from_raw(order.iter().map(|&i| a[(i, i)]).collect());
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, j| q[(i, order[j])]);

    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

fn offdiag_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Applies the two-sided rotation J' A J and accumulates J into Q, where J
/// rotates the (p, r) plane.
fn rotate(a: &mut DenseMatrix, q: &mut DenseMatrix, p: usize, r: usize, c: f64, s: f64) {
    let n = a.rows();
    // Columns: A <- A J.
    for k in 0..n {
        let akp = a[(k, p)];
        let akr = a[(k, r)];
        a[(k, p)] = c * akp - s * akr;
        a[(k, r)] = s * akp + c * akr;
    }
    // Rows: A <- J' A.
    for k in 0..n {
        let apk = a[(p, k)];
        let ark = a[(r, k)];
        a[(p, k)] = c * apk - s * ark;
        a[(r, k)] = s * apk + c * ark;
    }
    for k in 0..n {
        let qkp = q[(k, p)];
        let qkr = q[(k, r)];
        q[(k, p)] = c * qkp - s * qkr;
        q[(k, r)] = s * qkp + c * qkr;
    }
}
