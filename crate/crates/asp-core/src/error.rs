use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor was handed NaN or infinite entries.
    NonFinite,
    /// Vector or matrix dimensions do not agree.
    DimensionMismatch { expected: usize, found: usize },
    /// A matrix required to be symmetric violates the symmetry tolerance.
    NotSymmetric { max_asymmetry: f64 },
    /// An eigenvalue of a matrix required to be PSD fell below the negativity tolerance.
    NegativeEigenvalue { value: f64 },
    /// The rank-one update denominator 1 + u'Pu dropped to or below tolerance.
    DenominatorNearZero { value: f64 },
    /// A matrix that must be invertible is numerically singular.
    RankDeficient { smallest: f64, largest: f64 },
    /// An iteration exhausted its budget. Carries the per-iteration residual
    /// norms observed before giving up.
    NotConverged {
        iterations: usize,
        residual: f64,
        residual_history: Vec<f64>,
    },
    /// A splitting iteration hit a zero diagonal entry.
    ZeroDiagonal { index: usize },
    /// The new-state block of an augmented system has absorbed no measurements.
    UnderdeterminedNewState,
    /// Experiment configurations disagree on shared dimensions or are invalid.
    ConfigMismatch(String),
    /// A scalar argument is outside its documented range.
    InvalidParameter(&'static str),
    /// An algorithm failed while streaming; carries the 1-based iteration.
    AtIteration { iteration: usize, source: Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite => write!(f, "input contains NaN or infinite entries"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotSymmetric { max_asymmetry } => {
                write!(f, "matrix is not symmetric (max asymmetry {max_asymmetry:e})")
            }
            Error::NegativeEigenvalue { value } => {
                write!(f, "matrix is not positive semidefinite (eigenvalue {value:e})")
            }
            Error::DenominatorNearZero { value } => {
                write!(f, "rank-one update denominator too small ({value:e})")
            }
            Error::RankDeficient { smallest, largest } => {
                write!(f, "matrix is numerically rank deficient ({smallest:e} vs {largest:e})")
            }
            Error::NotConverged { iterations, residual, .. } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:e})")
            }
            Error::ZeroDiagonal { index } => {
                write!(f, "zero diagonal entry at index {index}")
            }
            Error::UnderdeterminedNewState => {
                write!(f, "new-state block has absorbed no measurements since the transition")
            }
            Error::ConfigMismatch(msg) => write!(f, "configuration error: {msg}"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::AtIteration { iteration, source } => {
                write!(f, "at iteration {iteration}: {source}")
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::AtIteration { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
