use thiserror::Error;

pub type Result<T> = std::result::Result<T, FdrError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FdrError {
    #[error("no statistics")]
    NoStatistics,

    #[error("non-finite statistic at index {index}")]
    NonFinite { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("design collinear in null region")]
    Collinear,

    #[error("IRLS did not converge after {iterations} iterations (last change {last_change:.3e})")]
    NotConverged {
        iterations: usize,
        last_change: f64,
        last_iterate: Vec<f64>,
    },

    #[error("null fit not a proper density: {0}")]
    ImproperNull(String),

    #[error("covariance not usable; fall back to diagonal")]
    CovarianceNotUsable,

    #[error("null region needs at least {needed} bins with positive counts, found {found}")]
    InsufficientNullBins { needed: usize, found: usize },
}
