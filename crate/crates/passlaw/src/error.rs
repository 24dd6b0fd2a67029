use thiserror::Error;

/// Crate-wide error type.
///
/// Variants split along the boundary the CLI cares about: data problems
/// (malformed or contradictory inputs) versus numerical failures (a
/// computation that could not reach its accuracy or convergence contract).
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A log or artifact failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Too few points, problems, or samples to run the requested fit.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A numerical routine produced a non-finite value or lost accuracy
    /// beyond its contract.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Adaptive integration hit its subdivision budget before reaching the
    /// requested tolerance. Carries the best estimate so callers may choose
    /// to proceed with documented degraded accuracy.
    #[error(
        "quadrature budget exhausted: estimate {estimate:e} with error {error_estimate:e} \
         (needed {required:e})"
    )]
    QuadratureBudget {
        estimate: f64,
        error_estimate: f64,
        required: f64,
    },

    /// Maximum-likelihood fitting failed across all restarts.
    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the input data (as opposed to numerical
    /// breakdown or I/O). The CLI maps these to its data exit code.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Parse { .. } | Error::InsufficientData(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
