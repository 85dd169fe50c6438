use alloc::string::String;

/// Errors raised by the library. Numerical gate failures are not errors;
/// they are reported as residuals by the checks that measure them.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("slot error: {0}")]
    Slot(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("input not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("degree out of range: {0}")]
    Degree(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("rank deficient immersion (smallest singular value {0:e})")]
    RankDeficient(f64),
    #[error("rank deficient design matrix (condition number {0:e})")]
    IllConditioned(f64),
    #[error("dimension requirement violated: {0}")]
    Dimension(String),
    #[error("point outside domain: {0}")]
    Domain(String),
    #[error("parity violation: {0}")]
    Parity(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("hypothesis violated: {what} (measured residual {residual:e})")]
    Precondition { what: String, residual: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = core::result::Result<T, Error>;
