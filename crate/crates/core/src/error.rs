use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("numerical underflow: {0}")]
    Underflow(String),

    #[error("series has zero variance")]
    ConstantSeries,

    #[error("series is empty")]
    EmptySeries,

    #[error("series too short: need at least {needed} values, got {got}")]
    InsufficientLength { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("chain failed at step {step}: {source}")]
    Step {
        step: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
