use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid group structure: {0}")]
    InvalidGroups(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("column {index} is constant and cannot be standardized")]
    ConstantColumn { index: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("refit on perturbation {index} failed: {source}")]
    PerturbedRefit {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
