//! Residue computation, error-correction solves, stationary splitting
//! iterations, and Krylov basis iteration.
//!
//! The splitting iterations solve `P x[n+1] = (P - A) x[n] + b` for an easily
//! inverted P: the diagonal (Jacobi), the lower triangle including the
//! diagonal (Gauss-Seidel), or the relaxed combination D/omega + L (SOR).
//! Splittings are defined for square systems; rectangular problems go
//! through their normal equations first.

use crate::error::{Error, Result};
use crate::filters::FilterState;
use crate::linalg::{solve_normal_equations, DenseMatrix, DenseVector, LinearSystem};

/// Default relative residual tolerance for splitting iterations.
pub const DEFAULT_SPLIT_TOL: f64 = 1e-10;

/// Default SOR relaxation factor.
pub const DEFAULT_OMEGA: f64 = 1.5;

/// Default iteration budget for splitting iterations.
pub fn default_max_iter(n: usize) -> usize {
    10 * n * n
}

/// Residual growth factor beyond which a splitting iteration aborts early
/// instead of overflowing.
const DIVERGENCE_CAP: f64 = 1e100;

/// Choice of preconditioner in the splitting iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplittingKind {
    /// P is the diagonal of A.
    Jacobi,
    /// P is the lower triangle of A including the diagonal.
    GaussSeidel,
    /// P = D/omega + L with relaxation omega strictly inside (0, 2).
    Sor(f64),
}

/// Per-iteration residual record of a splitting run.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    /// Euclidean residual norm after each iteration.
    pub residual_norms: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// The leading Krylov directions b, Ab, A^2 b, ...
#[derive(Debug, Clone)]
pub struct KrylovBasis {
    vectors: Vec<DenseVector>,
}

impl KrylovBasis {
    pub fn vectors(&self) -> &[DenseVector] {
        &self.vectors
    }

    pub fn depth(&self) -> usize {
        self.vectors.len()
    }
}

/// The inner solver used by `error_correct` for the error equation A e = r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerSolver {
    /// Direct least squares through the normal equations.
    Direct,
    /// Streaming correction cycling the rows with a fixed step size.
    Lms { mu: f64 },
}

/// The observable mismatch of a guess: b - A x.
pub fn compute_residue(sys: &LinearSystem, x: &DenseVector) -> Result<DenseVector> {
    if x.len() != sys.unknowns() {
        return Err(Error::DimensionMismatch { expected: sys.unknowns(), found: x.len() });
    }
    Ok(sys.observations().sub(&sys.matrix().matvec(x)))
}

/// Improves a guess by solving for its error: computes the residue r, solves
/// A e = r with the chosen inner solver, and returns x + e. With the direct
/// inner solver this lands on the least-squares solution in one application.
pub fn error_correct(
    sys: &LinearSystem,
    x_guess: &DenseVector,
    inner: InnerSolver,
    budget: usize,
) -> Result<DenseVector> {
    let residue = compute_residue(sys, x_guess)?;
    let error_system = LinearSystem::new(sys.matrix().clone(), residue.clone())?;
    let correction = match inner {
        InnerSolver::Direct => solve_normal_equations(&error_system)?,
        InnerSolver::Lms { mu } => {
            let mut state = FilterState::new(sys.unknowns());
            for step in 0..budget {
                let (a, r) = error_system.row(step % error_system.rows());
                state.lms_step(&a, r, mu)?;
            }
            let e = state.estimate().clone();
            // The budgeted iteration must at least not have made the guess
            // worse; a growing or non-finite residual means divergence.
            let before = residue.norm();
            let after = compute_residue(sys, &x_guess.add(&e))?.norm();
            if !after.is_finite() || after > before {
                return Err(Error::NotConverged {
                    iterations: budget,
                    residual: after,
                    residual_history: vec![before, after],
                });
            }
            e
        }
    };
    Ok(x_guess.add(&correction))
}

/// Stationary splitting iteration on a square system.
///
/// Stops when the Euclidean residual drops below `tol` times the norm of b,
/// or reports `NotConverged` with the residual history once `max_iter` runs
/// out (or the residual blows past any reasonable scale).
pub fn split_iterate(
    a: &DenseMatrix,
    b: &DenseVector,
    kind: SplittingKind,
    x0: &DenseVector,
    tol: f64,
    max_iter: usize,
) -> Result<(DenseVector, IterationTrace)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows(), found: a.cols() });
    }
    let n = a.rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x0.len() });
    }
    let omega = match kind {
        SplittingKind::Jacobi => 1.0,
        SplittingKind::GaussSeidel => 1.0,
        SplittingKind::Sor(w) => {
            if !(w > 0.0 && w < 2.0) {
                return Err(Error::InvalidParameter("SOR omega must lie strictly in (0, 2)"));
            }
            w
        }
    };
    for i in 0..n {
        if a[(i, i)] == 0.0 {
            return Err(Error::ZeroDiagonal { index: i });
        }
    }

    let scale = {
        let bn = b.norm();
        if bn > 0.0 {
            bn
        } else {
            1.0
        }
    };
    let mut x = x0.clone();
    let mut residual_norms = Vec::new();

    for _ in 0..max_iter {
        match kind {
            SplittingKind::Jacobi => {
                let mut next = vec![0.0; n];
                for i in 0..n {
                    let mut acc = b[i];
                    let row = a.row_slice(i);
                    for (j, &aij) in row.iter().enumerate() {
                        if j != i {
                            acc -= aij * x[j];
                        }
                    }
                    next[i] = acc / a[(i, i)];
                }
                x = DenseVector::from_raw(next);
            }
            SplittingKind::GaussSeidel | SplittingKind::Sor(_) => {
                // Forward sweep; entries to the left already hold x[n+1].
                for i in 0..n {
                    let mut acc = b[i];
                    let row = a.row_slice(i);
                    for (j, &aij) in row.iter().enumerate() {
                        if j != i {
                            acc -= aij * x[j];
                        }
                    }
                    let gs = acc / a[(i, i)];
                    x[i] = (1.0 - omega) * x[i] + omega * gs;
                }
            }
        }

        let residual = b.sub(&a.matvec(&x)).norm();
        residual_norms.push(residual);
        if residual < tol * scale {
            let iterations = residual_norms.len();
            return Ok((x, IterationTrace { residual_norms, converged: true, iterations }));
        }
        if !residual.is_finite() || residual > DIVERGENCE_CAP * scale {
            break;
        }
    }

    let iterations = residual_norms.len();
    let residual = residual_norms.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::NotConverged { iterations, residual, residual_history: residual_norms })
}

/// The leading `depth` Krylov directions [b, Ab, ..., A^(depth-1) b].
pub fn krylov_basis(a: &DenseMatrix, b: &DenseVector, depth: usize) -> Result<KrylovBasis> {
    if !a.is_square() || a.cols() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), found: a.cols() });
    }
    if depth < 1 {
        return Err(Error::InvalidParameter("Krylov depth must be at least 1"));
    }
    let mut vectors = Vec::with_capacity(depth);
    vectors.push(b.clone());
    for i in 1..depth {
        let next = a.matvec(&vectors[i - 1]);
        vectors.push(next);
    }
    Ok(KrylovBasis { vectors })
}

/// Richardson iteration with the identity preconditioner, started from b:
/// x <- (I - A) x + b. Each iterate is a polynomial in A applied to b, so
/// after s steps the result lies in the (s+1)-dimensional Krylov subspace.
pub fn krylov_iterate(a: &DenseMatrix, b: &DenseVector, steps: usize) -> Result<DenseVector> {
    if !a.is_square() || a.cols() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), found: a.cols() });
    }
    if steps < 1 {
        return Err(Error::InvalidParameter("steps must be at least 1"));
    }
    let mut x = b.clone();
    for _ in 0..steps {
        let ax = a.matvec(&x);
        x = x.sub(&ax).add(b);
    }
    Ok(x)
}
