use thiserror::Error;

#[derive(Debug, Error)]
pub enum BuraError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("Remez iteration did not converge after {iterations} iterations (last deviation spread {spread:.3e})")]
    NonConvergence { iterations: usize, spread: f64 },

    #[error("working precision exhausted at {bits} bits: {reason}")]
    PrecisionExhausted { bits: u32, reason: String },

    #[error("evaluation point {t} coincides with a pole")]
    PoleHit { t: f64 },

    #[error("denominator has {count} non-real roots; real partial fractions do not exist")]
    ComplexPoles { count: usize },

    #[error("denominator has a repeated root near {pole}")]
    RepeatedPoles { pole: f64 },

    #[error("expected {expected} extrema of the error function, found {found}")]
    WrongExtremaCount { expected: usize, found: usize },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("dimension {n} exceeds the cap {cap}")]
    DimensionTooLarge { n: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("shifted matrix A - ({shift})I is not positive definite")]
    ShiftNotSpd { shift: f64 },

    #[error("conjugate gradient did not reach relative residual {tol:.1e} in {iterations} iterations (reached {residual:.3e})")]
    CgDivergence { iterations: usize, residual: f64, tol: f64 },

    #[error("solver configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BuraError>;
