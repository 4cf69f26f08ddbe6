//! Seeded experiment runner: synthesizes identification problems, drives
//! every algorithm through identical data streams, and emits learning curves
//! and operation counts as CSV.
//!
//! Determinism contract: a fixed `ExperimentConfig` produces bit-identical
//! output on every run. Trials use seeds seed, seed+1, ... and their squared
//! errors are averaged pointwise.

mod csv;
mod rng;

pub use csv::{comparison_to_csv, curve_to_csv, CURVE_HEADER};

use crate::error::{Error, Result};
use crate::filters::{
    estimate_correlations, macs, reduced_rank_solve, wiener_ls_solve, wiener_mmse_solve,
    FilterState,
};
use crate::kalman::{augment, AugmentedRow, StateTransition};
use crate::linalg::{DenseMatrix, DenseVector, LinearSystem};

use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt;
use std::str::FromStr;

/// Which estimator an experiment drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Lms,
    Nlms,
    Kaczmarz,
    Ap,
    Rls,
    Sd,
    Kalman,
    WienerLs,
    WienerMmse,
    ReducedRank,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::Lms,
        Algorithm::Nlms,
        Algorithm::Kaczmarz,
        Algorithm::Ap,
        Algorithm::Rls,
        Algorithm::Sd,
        Algorithm::Kalman,
        Algorithm::WienerLs,
        Algorithm::WienerMmse,
        Algorithm::ReducedRank,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Lms => "lms",
            Algorithm::Nlms => "nlms",
            Algorithm::Kaczmarz => "kaczmarz",
            Algorithm::Ap => "ap",
            Algorithm::Rls => "rls",
            Algorithm::Sd => "sd",
            Algorithm::Kalman => "kalman",
            Algorithm::WienerLs => "wiener-ls",
            Algorithm::WienerMmse => "wiener-mmse",
            Algorithm::ReducedRank => "reduced-rank",
        }
    }

    /// Streaming algorithms have a well-defined per-iteration MAC count.
    pub fn is_streaming(&self) -> bool {
        matches!(
            self,
            Algorithm::Lms | Algorithm::Nlms | Algorithm::Kaczmarz | Algorithm::Ap | Algorithm::Rls
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .iter()
            .copied()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::ConfigMismatch(format!("unknown algorithm '{s}'")))
    }
}

/// Everything one experiment needs. `mu` feeds LMS and steepest descent,
/// `eps` the NLMS regulariser, `delta` the RLS/Kalman ridge seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    /// Filter length (number of unknowns).
    pub n: usize,
    /// Number of synthesized data rows; they are streamed cyclically.
    pub m: usize,
    /// Iteration budget for streaming algorithms.
    pub iters: usize,
    pub mu: f64,
    pub eps: f64,
    pub delta: f64,
    /// Standard deviation of additive observation noise.
    pub noise_std: f64,
    pub seed: u64,
    /// Number of seed-averaged trials.
    pub trials: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::ConfigMismatch(msg.to_string()));
        if self.n < 1 {
            return fail("n must be at least 1");
        }
        if self.m < 1 {
            return fail("m must be at least 1");
        }
        if self.iters < 1 {
            return fail("iters must be at least 1");
        }
        if self.trials < 1 {
            return fail("trials must be at least 1");
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return fail("noise_std must be non-negative and finite");
        }
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return fail("mu must be non-negative and finite");
        }
        if !(self.eps > 0.0) {
            return fail("eps must be positive");
        }
        if !(self.delta > 0.0) {
            return fail("delta must be positive");
        }
        if self.algorithm == Algorithm::Ap && self.n < 2 {
            return fail("ap needs n >= 2 (its block must stay under-determined)");
        }
        Ok(())
    }
}

/// One record of a learning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// 1-based iteration index.
    pub iteration: usize,
    /// Squared prediction error `e[k]^2` of the row consumed at this step.
    pub squared_prediction_error: f64,
    /// Squared parameter error against the true system.
    pub parameter_error: f64,
    /// Cumulative MAC charge up to and including this step.
    pub cumulative_macs: u64,
}

/// Per-iteration error trajectory of one experiment, averaged over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn from_points(points: Vec<CurvePoint>) -> Self {
        debug_assert!(points.iter().enumerate().all(|(i, p)| p.iteration == i + 1));
        Self { points }
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn final_parameter_error(&self) -> f64 {
        self.points.last().map(|p| p.parameter_error).unwrap_or(f64::NAN)
    }

    /// First 1-based iteration whose parameter error is at or below the
    /// threshold.
    pub fn first_iteration_at_or_below(&self, threshold: f64) -> Option<usize> {
        self.points
            .iter()
            .find(|p| p.parameter_error <= threshold)
            .map(|p| p.iteration)
    }
}

/// Draws the true system: entries i.i.d. uniform in [-1, 1] from the seeded
/// system stream. Identical (n, seed) pairs give bit-identical output.
pub fn make_system(n: usize, seed: u64) -> DenseVector {
    let mut rng = rng::system_stream(seed);
    DenseVector::from_fn(n, |_| rng.random_range(-1.0..=1.0))
}

/// Synthesizes data rows around a true system: rows i.i.d. standard normal,
/// observations b = a'x* + noise_std * nu. A zero noise level gives an
/// exactly consistent system; the noise draw still advances the stream so
/// noisy and noiseless runs share their rows for a fixed seed.
pub fn synthesize_data(
    x_star: &DenseVector,
    m: usize,
    noise_std: f64,
    seed: u64,
) -> Result<LinearSystem> {
    if m < 1 {
        return Err(Error::ConfigMismatch("m must be at least 1".to_string()));
    }
    let n = x_star.len();
    let mut rng = rng::data_stream(seed);
    let mut a = DenseMatrix::zeros(m, n);
    let mut b = DenseVector::zeros(m);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = rng.sample(StandardNormal);
        }
        let nu: f64 = rng.sample(StandardNormal);
        b[i] = a.row(i).dot(x_star) + noise_std * nu;
    }
    LinearSystem::new(a, b)
}

/// Runs one experiment: builds the system, streams the rows cyclically into
/// the chosen algorithm, and averages squared errors pointwise over
/// `cfg.trials` trials seeded seed, seed+1, ... Direct solvers produce a
/// single-point curve.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<LearningCurve> {
    cfg.validate()?;
    let x_star = make_system(cfg.n, cfg.seed);

    let mut sums: Vec<(f64, f64)> = Vec::new();
    let mut macs_track: Vec<u64> = Vec::new();

    for trial in 0..cfg.trials {
        let sys = synthesize_data(&x_star, cfg.m, cfg.noise_std, cfg.seed + trial as u64)?;
        let points = run_single(cfg, &sys, &x_star)?;
        if trial == 0 {
            sums = points.iter().map(|p| (p.squared_prediction_error, p.parameter_error)).collect();
            macs_track = points.iter().map(|p| p.cumulative_macs).collect();
        } else {
            debug_assert_eq!(points.len(), sums.len());
            for (acc, p) in sums.iter_mut().zip(&points) {
                acc.0 += p.squared_prediction_error;
                acc.1 += p.parameter_error;
            }
        }
    }

    let scale = 1.0 / cfg.trials as f64;
    let points = sums
        .into_iter()
        .zip(macs_track)
        .enumerate()
        .map(|(i, ((e2, pe), macs))| CurvePoint {
            iteration: i + 1,
            squared_prediction_error: e2 * scale,
            parameter_error: pe * scale,
            cumulative_macs: macs,
        })
        .collect();
    Ok(LearningCurve::from_points(points))
}

fn check_finite(iteration: usize, e2: f64, pe: f64) -> Result<()> {
    if e2.is_finite() && pe.is_finite() {
        Ok(())
    } else {
        Err(Error::AtIteration { iteration, source: Box::new(Error::NonFinite) })
    }
}

fn param_error(estimate: &DenseVector, x_star: &DenseVector) -> f64 {
    let d = estimate.sub(x_star);
    d.dot(&d)
}

fn mean_squared_residual(sys: &LinearSystem, x: &DenseVector) -> f64 {
    let r = sys.observations().sub(&sys.matrix().matvec(x));
    r.dot(&r) / sys.rows() as f64
}

fn run_single(cfg: &ExperimentConfig, sys: &LinearSystem, x_star: &DenseVector) -> Result<Vec<CurvePoint>> {
    let wrap = |iteration: usize| move |e: Error| Error::AtIteration { iteration, source: Box::new(e) };
    let mut points = Vec::new();

    match cfg.algorithm {
        Algorithm::Lms | Algorithm::Nlms | Algorithm::Kaczmarz | Algorithm::Rls => {
            let mut state = match cfg.algorithm {
                Algorithm::Rls => FilterState::with_inverse(cfg.n, cfg.delta)?,
                _ => FilterState::new(cfg.n),
            };
            for t in 0..cfg.iters {
                let it = t + 1;
                let (a, b) = sys.row(t % cfg.m);
                let rec = match cfg.algorithm {
                    Algorithm::Lms => state.lms_step(&a, b, cfg.mu),
                    Algorithm::Rls => state.rls_step(&a, b),
                    // The Kaczmarz recursion is the NLMS projection; cycling
                    // over a fixed row set is exactly what this stream does.
                    _ => state.nlms_step(&a, b, cfg.eps),
                }
                .map_err(wrap(it))?;
                let e2 = rec.prior_error * rec.prior_error;
                let pe = param_error(state.estimate(), x_star);
                check_finite(it, e2, pe)?;
                points.push(CurvePoint {
                    iteration: it,
                    squared_prediction_error: e2,
                    parameter_error: pe,
                    cumulative_macs: state.mac_count(),
                });
            }
        }
        Algorithm::Ap => {
            // Sliding block of the most recent rows, capped below n to keep
            // the block under-determined.
            let block = (cfg.n - 1).min(cfg.m);
            let mut state = FilterState::new(cfg.n);
            for t in 0..cfg.iters {
                let it = t + 1;
                let k = block.min(t + 1);
                let mut ak = DenseMatrix::zeros(k, cfg.n);
                let mut bk = DenseVector::zeros(k);
                for j in 0..k {
                    let idx = (t - j) % cfg.m;
                    for col in 0..cfg.n {
                        ak[(j, col)] = sys.matrix()[(idx, col)];
                    }
                    bk[j] = sys.observations()[idx];
                }
                let (a_new, b_new) = sys.row(t % cfg.m);
                let prior = b_new - a_new.dot(state.estimate());
                state.ap_step(&ak, &bk).map_err(wrap(it))?;
                let e2 = prior * prior;
                let pe = param_error(state.estimate(), x_star);
                check_finite(it, e2, pe)?;
                points.push(CurvePoint {
                    iteration: it,
                    squared_prediction_error: e2,
                    parameter_error: pe,
                    cumulative_macs: state.mac_count(),
                });
            }
        }
        Algorithm::Sd => {
            let corr = estimate_correlations(sys);
            let mut state = FilterState::new(cfg.n);
            for t in 0..cfg.iters {
                let it = t + 1;
                let e2 = mean_squared_residual(sys, state.estimate());
                state.sd_step(&corr, cfg.mu).map_err(wrap(it))?;
                let pe = param_error(state.estimate(), x_star);
                check_finite(it, e2, pe)?;
                points.push(CurvePoint {
                    iteration: it,
                    squared_prediction_error: e2,
                    parameter_error: pe,
                    cumulative_macs: state.mac_count(),
                });
            }
        }
        Algorithm::Kalman => {
            // Time-invariant augmentation: identity transition folded once,
            // then every row lands as a measurement of the new block.
            let trans = StateTransition::identity(cfg.n);
            let prior_inverse = DenseMatrix::scaled_identity(cfg.n, 1.0 / cfg.delta);
            let zeros = DenseVector::zeros(cfg.n);
            let mut state =
                augment(&prior_inverse, &zeros, &zeros, &trans, cfg.delta).map_err(wrap(1))?;
            let mut total_macs = cfg.n as u64 * macs::sherman_morrison(2 * cfg.n);
            for t in 0..cfg.iters {
                let it = t + 1;
                let (a, b) = sys.row(t % cfg.m);
                let rec = state
                    .measurement_update(&AugmentedRow::measurement(&a, b))
                    .map_err(wrap(it))?;
                total_macs += rec.macs;
                let e2 = rec.prior_error * rec.prior_error;
                let pe = param_error(&state.new_state(), x_star);
                check_finite(it, e2, pe)?;
                points.push(CurvePoint {
                    iteration: it,
                    squared_prediction_error: e2,
                    parameter_error: pe,
                    cumulative_macs: total_macs,
                });
            }
        }
        Algorithm::WienerLs | Algorithm::WienerMmse | Algorithm::ReducedRank => {
            let estimate = match cfg.algorithm {
                Algorithm::WienerLs => wiener_ls_solve(sys).map_err(wrap(1))?,
                Algorithm::WienerMmse => {
                    wiener_mmse_solve(&estimate_correlations(sys)).map_err(wrap(1))?
                }
                _ => reduced_rank_solve(sys, crate::linalg::DEFAULT_RANK_TOL).map_err(wrap(1))?,
            };
            let e2 = mean_squared_residual(sys, &estimate);
            let pe = param_error(&estimate, x_star);
            check_finite(1, e2, pe)?;
            let n = cfg.n as u64;
            let m = cfg.m as u64;
            points.push(CurvePoint {
                iteration: 1,
                squared_prediction_error: e2,
                parameter_error: pe,
                cumulative_macs: m * n * n + m * n + n * n,
            });
        }
    }
    Ok(points)
}

/// Runs several configurations over byte-identical data streams (same
/// system, same per-trial rows). The configurations must agree on n, m, and
/// the noise level.
pub fn compare_algorithms(
    cfgs: &[ExperimentConfig],
    shared_seed: u64,
) -> Result<Vec<(Algorithm, LearningCurve)>> {
    let first = cfgs
        .first()
        .ok_or_else(|| Error::ConfigMismatch("no configurations given".to_string()))?;
    for cfg in cfgs {
        if cfg.n != first.n || cfg.m != first.m || cfg.noise_std != first.noise_std {
            return Err(Error::ConfigMismatch(
                "compared configurations must share n, m, and noise_std".to_string(),
            ));
        }
    }
    cfgs.iter()
        .map(|cfg| {
            let mut shared = *cfg;
            shared.seed = shared_seed;
            run_experiment(&shared).map(|curve| (cfg.algorithm, curve))
        })
        .collect()
}

/// Measured per-iteration MAC count of a streaming algorithm, taken from the
/// cumulative tallies of an instrumented run after warm-up.
pub fn count_ops(algorithm: Algorithm, n: usize) -> Result<u64> {
    if !algorithm.is_streaming() {
        return Err(Error::ConfigMismatch(format!(
            "count_ops needs a streaming algorithm, got '{algorithm}'"
        )));
    }
    let cfg = ExperimentConfig {
        algorithm,
        n,
        m: (2 * n).max(4),
        iters: n + 6,
        mu: 0.0,
        eps: crate::filters::DEFAULT_NLMS_EPS,
        delta: crate::filters::DEFAULT_DELTA,
        noise_std: 0.0,
        seed: 0x0c0de,
        trials: 1,
    };
    let curve = run_experiment(&cfg)?;
    let pts = curve.points();
    let last = pts[pts.len() - 1].cumulative_macs - pts[pts.len() - 2].cumulative_macs;
    let prev = pts[pts.len() - 2].cumulative_macs - pts[pts.len() - 3].cumulative_macs;
    debug_assert_eq!(last, prev, "per-step MAC count must be constant after warm-up");
    Ok(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::CorrelationPair;

    fn base_cfg(algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            algorithm,
            n: 5,
            m: 50,
            iters: 50,
            mu: 0.05,
            eps: 1e-12,
            delta: 1e-6,
            noise_std: 0.0,
            seed: 7,
            trials: 2,
        }
    }

    #[test]
    fn make_system_is_deterministic_and_bounded() {
        let a = make_system(5, 99);
        let b = make_system(5, 99);
        assert_eq!(a.as_slice(), b.as_slice());
        assert!(a.iter().all(|&x| (-1.0..=1.0).contains(&x)));
        let c = make_system(5, 100);
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn synthesized_data_is_deterministic_and_consistent_when_noiseless() {
        let x_star = make_system(4, 3);
        let s1 = synthesize_data(&x_star, 12, 0.0, 3).unwrap();
        let s2 = synthesize_data(&x_star, 12, 0.0, 3).unwrap();
        assert_eq!(s1.matrix(), s2.matrix());
        assert_eq!(s1.observations(), s2.observations());
        let r = s1.observations().sub(&s1.matrix().matvec(&x_star));
        assert!(r.max_abs() < 1e-15);
    }

    #[test]
    fn noisy_and_noiseless_runs_share_their_rows() {
        let x_star = make_system(3, 11);
        let clean = synthesize_data(&x_star, 6, 0.0, 11).unwrap();
        let noisy = synthesize_data(&x_star, 6, 0.5, 11).unwrap();
        assert_eq!(clean.matrix(), noisy.matrix());
        assert_ne!(clean.observations(), noisy.observations());
    }

    #[test]
    fn zero_step_lms_curve_is_flat_at_the_system_norm() {
        let mut cfg = base_cfg(Algorithm::Lms);
        cfg.mu = 0.0;
        let x_star = make_system(cfg.n, cfg.seed);
        let curve = run_experiment(&cfg).unwrap();
        let expected = x_star.dot(&x_star);
        for p in curve.points() {
            assert!((p.parameter_error - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn direct_solver_produces_one_exact_point() {
        let cfg = base_cfg(Algorithm::WienerLs);
        let curve = run_experiment(&cfg).unwrap();
        assert_eq!(curve.len(), 1);
        assert!(curve.points()[0].parameter_error < 1e-18);
    }

    #[test]
    fn rls_reaches_the_least_squares_solution() {
        let cfg = base_cfg(Algorithm::Rls);
        let curve = run_experiment(&cfg).unwrap();
        assert!(curve.final_parameter_error() < 1e-10);
    }

    #[test]
    fn every_emitted_error_is_finite_and_non_negative() {
        for algorithm in Algorithm::ALL {
            let mut cfg = base_cfg(algorithm);
            cfg.iters = 20;
            cfg.noise_std = 0.01;
            cfg.mu = 0.05;
            let curve = run_experiment(&cfg).unwrap();
            for p in curve.points() {
                assert!(p.squared_prediction_error.is_finite());
                assert!(p.squared_prediction_error >= 0.0);
                assert!(p.parameter_error.is_finite());
                assert!(p.parameter_error >= 0.0);
            }
        }
    }

    #[test]
    fn comparison_requires_shared_dimensions() {
        let a = base_cfg(Algorithm::Lms);
        let mut b = base_cfg(Algorithm::Rls);
        b.n = 4;
        assert!(matches!(
            compare_algorithms(&[a, b], 1),
            Err(Error::ConfigMismatch(_))
        ));
    }

    #[test]
    fn single_config_comparison_equals_run_experiment() {
        let cfg = base_cfg(Algorithm::Nlms);
        let direct = run_experiment(&cfg).unwrap();
        let compared = compare_algorithms(&[cfg], cfg.seed).unwrap();
        assert_eq!(compared.len(), 1);
        assert_eq!(compared[0].1, direct);
    }

    #[test]
    fn comparison_csv_is_byte_stable() {
        let cfgs = [base_cfg(Algorithm::Lms), base_cfg(Algorithm::Rls)];
        let one = comparison_to_csv(&compare_algorithms(&cfgs, 5).unwrap());
        let two = comparison_to_csv(&compare_algorithms(&cfgs, 5).unwrap());
        assert_eq!(one, two);
        assert!(one.starts_with("algorithm,iteration,"));
    }

    #[test]
    fn counted_ops_match_the_convention() {
        assert_eq!(count_ops(Algorithm::Lms, 5).unwrap(), 11);
        assert_eq!(count_ops(Algorithm::Nlms, 5).unwrap(), 17);
        assert_eq!(count_ops(Algorithm::Kaczmarz, 5).unwrap(), 17);
        assert!(count_ops(Algorithm::WienerLs, 5).is_err());
    }

    #[test]
    fn rls_count_scales_quadratically() {
        let c8 = count_ops(Algorithm::Rls, 8).unwrap() as f64;
        let c16 = count_ops(Algorithm::Rls, 16).unwrap() as f64;
        let ratio = c16 / c8;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    /// The trial-averaged LMS curve follows the steepest-descent curve driven
    /// by the correlations of the full data set, within a factor of three
    /// once the transient has passed.
    #[test]
    fn averaged_lms_tracks_steepest_descent() {
        let cfg = ExperimentConfig {
            algorithm: Algorithm::Lms,
            n: 5,
            m: 400,
            iters: 250,
            mu: 0.01,
            eps: 1e-12,
            delta: 1e-6,
            noise_std: 0.0,
            seed: 17,
            trials: 64,
        };
        let lms = run_experiment(&cfg).unwrap();

        // Steepest descent on the correlations of all trials' data pooled.
        let x_star = make_system(cfg.n, cfg.seed);
        let mut r_sum = DenseMatrix::zeros(cfg.n, cfg.n);
        let mut p_sum = DenseVector::zeros(cfg.n);
        for trial in 0..cfg.trials {
            let sys =
                synthesize_data(&x_star, cfg.m, cfg.noise_std, cfg.seed + trial as u64).unwrap();
            let corr = estimate_correlations(&sys);
            r_sum = r_sum.add(corr.auto());
            p_sum = p_sum.add(corr.cross());
        }
        let scale = 1.0 / cfg.trials as f64;
        let corr = CorrelationPair::new(r_sum.scaled(scale), p_sum.scaled(scale)).unwrap();

        let mut sd = FilterState::new(cfg.n);
        let mut sd_curve = Vec::with_capacity(cfg.iters);
        for _ in 0..cfg.iters {
            sd.sd_step(&corr, cfg.mu).unwrap();
            sd_curve.push(param_error(sd.estimate(), &x_star));
        }

        for (p, &sd_err) in lms.points().iter().zip(&sd_curve) {
            if p.iteration < 50 {
                continue;
            }
            let ratio = p.parameter_error / sd_err;
            assert!(
                (1.0 / 3.0..=3.0).contains(&ratio),
                "iteration {}: averaged LMS {:e} vs SD {:e}",
                p.iteration,
                p.parameter_error,
                sd_err
            );
        }
    }
}
