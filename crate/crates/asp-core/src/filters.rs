//! Streaming parameter estimators. Every algorithm here is one choice of
//! gain in the same correction equation
//!
//! ```text
//! x[k+1] = x[k] + gain * (b_k - a_k' x[k])
//! ```
//!
//! LMS scales the data row by a fixed step size, NLMS normalises it, the
//! Kaczmarz solver cycles NLMS over a fixed row set, affine projection
//! corrects against a block of recent rows at once, and RLS applies a
//! maintained inverse of the regularised Gram matrix. The batch estimators
//! (steepest descent and the Wiener solvers) live here too since they share
//! the correlation structures.
//!
//! # Operation accounting
//!
//! Each step tallies multiply-accumulate (MAC) charges under one convention:
//! a length-n dot product costs n, a scalar-times-vector accumulation costs
//! n, a scalar subtraction or division costs 1, an r-by-c matrix-vector
//! product costs r*c, a rank-one inverse update costs n^2 on top of its
//! matvec, and applying a k-by-k inverse to a vector costs k^2. Under this
//! convention LMS costs exactly 2n+1 per step and NLMS 3n+2, while affine
//! projection and RLS grow quadratically.

use crate::error::{Error, Result};
use crate::linalg::{
    ge_solve, pinv_psd, solve_normal_equations, symmetric_eigendecompose, underdetermined_apply,
    DenseMatrix, DenseVector, LinearSystem,
};

/// Default NLMS regulariser guarding the zero-row case.
pub const DEFAULT_NLMS_EPS: f64 = 1e-12;

/// Default ridge seed for maintained inverses: the starting inverse is
/// (1/delta) I, so the maintained matrix tracks (delta I + A'A)^{-1}.
pub const DEFAULT_DELTA: f64 = 1e-6;

/// MAC charges under the module convention. Shared with the Kalman module,
/// which runs the same updates on the augmented state.
pub(crate) mod macs {
    pub(crate) fn dot(n: usize) -> u64 {
        n as u64
    }
    pub(crate) fn axpy(n: usize) -> u64 {
        n as u64
    }
    pub(crate) fn scalar() -> u64 {
        1
    }
    pub(crate) fn matvec(rows: usize, cols: usize) -> u64 {
        (rows * cols) as u64
    }
    pub(crate) fn rank_one_update(n: usize) -> u64 {
        (n * n) as u64
    }
    pub(crate) fn inverse_apply(k: usize) -> u64 {
        (k * k) as u64
    }
    /// Total charge of one rank-one inverse maintenance step at size n.
    pub(crate) fn sherman_morrison(n: usize) -> u64 {
        matvec(n, n) + dot(n) + scalar() + rank_one_update(n)
    }
    /// Total charge of one RLS-style update at size n.
    pub(crate) fn rls_step(n: usize) -> u64 {
        sherman_morrison(n) + matvec(n, n) + dot(n) + scalar() + axpy(n)
    }
}

/// What one streaming update did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateRecord {
    /// Prediction error before the update: b - a'x.
    pub prior_error: f64,
    /// Euclidean norm of the applied gain vector.
    pub gain_norm: f64,
    /// MAC charge of this step.
    pub macs: u64,
    /// True when a degenerate row (squared norm below eps) was skipped.
    pub skipped: bool,
}

/// Current estimate plus the bookkeeping a streaming estimator needs: an
/// optional maintained inverse for RLS, the step counter, and the cumulative
/// MAC tally.
///
/// A state is owned by one caller and advanced sequentially; independent
/// states may run on independent threads without coordination.
///
/// ```
/// use asp_core::filters::FilterState;
/// use asp_core::harness::{make_system, synthesize_data};
///
/// let x_star = make_system(5, 42);
/// let data = synthesize_data(&x_star, 50, 0.0, 42).unwrap();
///
/// let mut rls = FilterState::with_inverse(5, 1e-6).unwrap();
/// for i in 0..data.rows() {
///     let (a, b) = data.row(i);
///     rls.rls_step(&a, b).unwrap();
/// }
/// assert!(rls.estimate().max_abs_diff(&x_star) < 1e-6);
/// ```
#[derive(Debug, Clone)]
pub struct FilterState {
    estimate: DenseVector,
    inverse: Option<DenseMatrix>,
    step_index: u64,
    mac_count: u64,
}

impl FilterState {
    /// Zero initial estimate of length n, no maintained inverse.
    pub fn new(n: usize) -> Self {
        Self::from_estimate(DenseVector::zeros(n))
    }

    /// Starts from a caller-supplied guess.
    pub fn from_estimate(estimate: DenseVector) -> Self {
        Self { estimate, inverse: None, step_index: 0, mac_count: 0 }
    }

    /// Zero estimate with the maintained inverse seeded at (1/delta) I.
    /// `delta = 1.0` reproduces a plain identity starting candidate.
    pub fn with_inverse(n: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter("delta must be positive and finite"));
        }
        Ok(Self {
            estimate: DenseVector::zeros(n),
            inverse: Some(DenseMatrix::scaled_identity(n, 1.0 / delta)),
            step_index: 0,
            mac_count: 0,
        })
    }

    pub fn estimate(&self) -> &DenseVector {
        &self.estimate
    }

    pub fn inverse(&self) -> Option<&DenseMatrix> {
        self.inverse.as_ref()
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn mac_count(&self) -> u64 {
        self.mac_count
    }

    pub fn dimension(&self) -> usize {
        self.estimate.len()
    }

    fn check_row(&self, a: &DenseVector) -> Result<()> {
        if a.len() != self.estimate.len() {
            return Err(Error::DimensionMismatch {
                expected: self.estimate.len(),
                found: a.len(),
            });
        }
        Ok(())
    }

    /// Fixed-step correction along the data row.
    ///
    /// `estimate += mu * (b - a'x) * a`; charges exactly 2n+1 MACs.
    pub fn lms_step(&mut self, a: &DenseVector, b: f64, mu: f64) -> Result<UpdateRecord> {
        self.check_row(a)?;
        if !(mu >= 0.0) {
            return Err(Error::InvalidParameter("mu must be non-negative"));
        }
        let n = a.len();
        let prior_error = b - a.dot(&self.estimate);
        let macs = macs::dot(n) + macs::scalar() + macs::axpy(n);
        let record = self.apply_row_correction(mu, prior_error, a, macs);
        Ok(record)
    }

    /// Normalised correction: the step size becomes 1/(a'a + eps), which
    /// projects the estimate onto the row's solution hyperplane. Rows with
    /// squared norm below eps are skipped rather than divided by.
    ///
    /// Charges 3n+2 MACs (the extra a'a plus the divide).
    pub fn nlms_step(&mut self, a: &DenseVector, b: f64, eps: f64) -> Result<UpdateRecord> {
        self.check_row(a)?;
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive"));
        }
        let n = a.len();
        let norm_sq = a.dot(a);
        let prior_error = b - a.dot(&self.estimate);
        if norm_sq < eps {
            self.step_index += 1;
            let macs = macs::dot(n) + macs::dot(n) + macs::scalar();
            self.mac_count += macs;
            return Ok(UpdateRecord { prior_error, gain_norm: 0.0, macs, skipped: true });
        }
        // Shares the exact arithmetic path of lms_step so that NLMS equals
        // LMS bit-for-bit when the caller feeds mu = 1/(a'a + eps).
        let mu = 1.0 / (norm_sq + eps);
        let macs = macs::dot(n) + macs::dot(n) + 2 * macs::scalar() + macs::axpy(n);
        let record = self.apply_row_correction(mu, prior_error, a, macs);
        Ok(record)
    }

    fn apply_row_correction(
        &mut self,
        mu: f64,
        prior_error: f64,
        a: &DenseVector,
        macs: u64,
    ) -> UpdateRecord {
        let step = mu * prior_error;
        self.estimate.add_scaled(step, a);
        self.step_index += 1;
        self.mac_count += macs;
        UpdateRecord {
            prior_error,
            gain_norm: mu.abs() * a.norm(),
            macs,
            skipped: false,
        }
    }

    /// Recursive least squares: folds the row into the maintained inverse by
    /// a rank-one update, then corrects with the resulting gain. Theta(n^2)
    /// per step.
    ///
    /// The gain (updated inverse times the row) is evaluated in its
    /// quotient form w / (1 + a'w) with w the pre-update inverse applied to
    /// the row, which keeps the estimate path clean even for very small
    /// ridge seeds.
    pub fn rls_step(&mut self, a: &DenseVector, b: f64) -> Result<UpdateRecord> {
        self.check_row(a)?;
        let inverse = self
            .inverse
            .as_ref()
            .ok_or(Error::InvalidParameter("rls_step needs a maintained inverse"))?;
        let (updated, w, denom) =
            crate::linalg::sherman_morrison_parts(inverse, a, crate::linalg::DEFAULT_SM_TOL)?;
        let n = a.len();
        let prior_error = b - a.dot(&self.estimate);
        let gain = w.scaled(1.0 / denom);
        self.estimate.add_scaled(prior_error, &gain);
        self.inverse = Some(updated);
        self.step_index += 1;
        let macs = macs::rls_step(n);
        self.mac_count += macs;
        Ok(UpdateRecord { prior_error, gain_norm: gain.norm(), macs, skipped: false })
    }

    /// Affine projection: corrects against a block of k < n rows at once so
    /// that the block constraints hold exactly after the step. The inner
    /// k-by-k system is solved fresh by elimination each call; its gain
    /// application is charged k^2 under the module convention.
    pub fn ap_step(&mut self, ak: &DenseMatrix, bk: &DenseVector) -> Result<UpdateRecord> {
        if ak.cols() != self.estimate.len() {
            return Err(Error::DimensionMismatch {
                expected: self.estimate.len(),
                found: ak.cols(),
            });
        }
        if ak.rows() != bk.len() {
            return Err(Error::DimensionMismatch { expected: ak.rows(), found: bk.len() });
        }
        let k = ak.rows();
        let n = ak.cols();
        let residual = bk.sub(&ak.matvec(&self.estimate));
        // By convention the record reports the first block row's residual;
        // callers streaming newest-first read it as the current prediction
        // error.
        let prior_error = residual[0];
        let correction = underdetermined_apply(ak, &residual)?;
        self.estimate = self.estimate.add(&correction);
        self.step_index += 1;
        let macs = macs::matvec(k, n) + k as u64 * macs::scalar()
            + macs::inverse_apply(k)
            + macs::matvec(k, n);
        self.mac_count += macs;
        Ok(UpdateRecord { prior_error, gain_norm: correction.norm(), macs, skipped: false })
    }

    /// Steepest descent on the averaged quadratic cost: follows the gradient
    /// P - R x scaled by mu.
    pub fn sd_step(&mut self, corr: &CorrelationPair, mu: f64) -> Result<()> {
        if corr.dimension() != self.estimate.len() {
            return Err(Error::DimensionMismatch {
                expected: self.estimate.len(),
                found: corr.dimension(),
            });
        }
        if !(mu >= 0.0) {
            return Err(Error::InvalidParameter("mu must be non-negative"));
        }
        let n = self.estimate.len();
        let gradient = corr.cross().sub(&corr.auto().matvec(&self.estimate));
        self.estimate.add_scaled(mu, &gradient);
        self.step_index += 1;
        self.mac_count += macs::matvec(n, n) + n as u64 * macs::scalar() + macs::axpy(n);
        Ok(())
    }

    /// RLS variant for rank-deficient Gram matrices: the gain comes from the
    /// pseudoinverse of the full accumulated Gram (which the caller maintains
    /// by rank-one accumulation) instead of a maintained inverse.
    pub fn reduced_rank_rls_step(
        &mut self,
        full_gram: &DenseMatrix,
        a: &DenseVector,
        b: f64,
        rank_tol: f64,
    ) -> Result<()> {
        self.check_row(a)?;
        if full_gram.rows() != a.len() || full_gram.cols() != a.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: full_gram.rows(),
            });
        }
        let n = a.len();
        let pinv = pinv_psd(full_gram, rank_tol)?;
        let prior_error = b - a.dot(&self.estimate);
        let gain = pinv.matvec(a);
        self.estimate.add_scaled(prior_error, &gain);
        self.step_index += 1;
        self.mac_count +=
            macs::matvec(n, n) + macs::dot(n) + macs::scalar() + macs::axpy(n);
        Ok(())
    }
}

/// Autocorrelation matrix R and cross-correlation vector P of a data set,
/// i.e. the row-averaged Gram matrix and right-hand side.
#[derive(Debug, Clone)]
pub struct CorrelationPair {
    r: DenseMatrix,
    p: DenseVector,
}

impl CorrelationPair {
    pub fn new(r: DenseMatrix, p: DenseVector) -> Result<Self> {
        if r.rows() != p.len() {
            return Err(Error::DimensionMismatch { expected: r.rows(), found: p.len() });
        }
        r.check_symmetric()?;
        Ok(Self { r, p })
    }

    pub fn auto(&self) -> &DenseMatrix {
        &self.r
    }

    pub fn cross(&self) -> &DenseVector {
        &self.p
    }

    pub fn dimension(&self) -> usize {
        self.p.len()
    }
}

/// Row-averaged correlation estimates: R = A'A / k and P = A'b / k.
pub fn estimate_correlations(sys: &LinearSystem) -> CorrelationPair {
    let k = sys.rows() as f64;
    let r = sys.matrix().gram().scaled(1.0 / k);
    let p = sys.matrix().transpose_matvec(sys.observations()).scaled(1.0 / k);
    CorrelationPair { r, p }
}

/// Cyclic row projection for consistent wide systems: sweeps NLMS over the
/// rows until the worst row residual drops below `tol` or the sweep budget
/// runs out. Started from zero on a consistent system it converges to the
/// minimum-norm solution.
pub fn kaczmarz_solve(
    sys: &LinearSystem,
    x0: &DenseVector,
    max_sweeps: usize,
    tol: f64,
) -> Result<DenseVector> {
    if x0.len() != sys.unknowns() {
        return Err(Error::DimensionMismatch { expected: sys.unknowns(), found: x0.len() });
    }
    let mut state = FilterState::from_estimate(x0.clone());
    let mut history = Vec::new();
    for _ in 0..max_sweeps {
        for i in 0..sys.rows() {
            let (a, b) = sys.row(i);
            state.nlms_step(&a, b, DEFAULT_NLMS_EPS)?;
        }
        // Residuals of the sweep-end iterate over all rows; checking each
        // row right after its own projection would always read zero.
        let worst = (0..sys.rows())
            .map(|i| {
                let (a, b) = sys.row(i);
                (b - a.dot(state.estimate())).abs()
            })
            .fold(0.0f64, f64::max);
        history.push(worst);
        if worst < tol {
            return Ok(state.estimate().clone());
        }
    }
    let residual = history.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::NotConverged { iterations: history.len(), residual, residual_history: history })
}

/// Solves R x = P directly. The caller falls back to `reduced_rank_solve`
/// when R is rank deficient.
pub fn wiener_mmse_solve(corr: &CorrelationPair) -> Result<DenseVector> {
    let eig = symmetric_eigendecompose(corr.auto())?;
    let (largest, smallest) = (eig.max_eigenvalue(), eig.min_eigenvalue());
    if !(largest > 0.0) || smallest <= crate::linalg::RANK_RATIO_TOL * largest {
        return Err(Error::RankDeficient { smallest, largest });
    }
    ge_solve(corr.auto(), corr.cross())
}

/// Least-squares solve of the full data set through the normal equations.
/// Identical to the correlation-form solve because the 1/k row averaging
/// cancels on both sides.
pub fn wiener_ls_solve(sys: &LinearSystem) -> Result<DenseVector> {
    let x = solve_normal_equations(sys)?;
    #[cfg(debug_assertions)]
    {
        if let Ok(mmse) = wiener_mmse_solve(&estimate_correlations(sys)) {
            debug_assert!(
                x.max_abs_diff(&mmse) < 1e-8,
                "normal-equation and correlation solves disagree"
            );
        }
    }
    Ok(x)
}

/// Least-squares solve that stays defined for rank-deficient data:
/// x = (A'A)^+ A'b with zero eigenvalues left un-inverted, yielding the
/// minimum-norm least-squares solution.
pub fn reduced_rank_solve(sys: &LinearSystem, rank_tol: f64) -> Result<DenseVector> {
    let pinv = pinv_psd(&sys.matrix().gram(), rank_tol)?;
    let rhs = sys.matrix().transpose_matvec(sys.observations());
    Ok(pinv.matvec(&rhs))
}
