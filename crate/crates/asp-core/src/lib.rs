//! One correction equation, many estimators.
//!
//! Every algorithm in this crate advances an estimate by the same move,
//! `x[k+1] = x[k] + gain * residual`, differing only in how the gain is
//! built: a fixed step size (LMS), row normalisation (NLMS, Kaczmarz), a
//! block projection (affine projection), a maintained inverse of the data
//! Gram matrix (RLS, and the augmented-state Kalman filter), averaged
//! correlations (steepest descent, the Wiener solvers), or an easily
//! inverted preconditioner (Jacobi, Gauss-Seidel, SOR). The same residue
//! also drives error-correction solves and Krylov basis iteration.
//!
//! Modules:
//!
//! * [`linalg`]: dense kernels - rank-one inverse updates, symmetric
//!   eigendecomposition, pseudoinverses, direct least squares.
//! * [`filters`]: the streaming estimators with per-step operation counts.
//! * [`kalman`]: time-varying estimation by state augmentation.
//! * [`solvers`]: residue/error correction, splitting iterations, Krylov.
//! * [`harness`]: seeded experiment runner emitting learning curves as CSV.

// Guards are written `!(x > 0.0)` on purpose: the negation also catches NaN,
// which `x <= 0.0` lets through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;

pub mod filters;
pub mod harness;
pub mod kalman;
pub mod linalg;
pub mod solvers;

pub use error::{Error, Result};
