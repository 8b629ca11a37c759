use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter out of regime: {0}")]
    Regime(String),

    #[error("binomial coefficient C({n}, {k}) is not exactly representable (n > {max})")]
    BinomialOverflow { n: usize, k: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dense oracle size guard: {0}")]
    SizeGuard(String),

    #[error("solver did not converge within {iterations} Newton iterations")]
    MaxIterations { iterations: usize },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("certification failed: duality gap {gap:.3e} exceeds tolerance {tol:.3e}")]
    CertificationFailure { gap: f64, tol: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
