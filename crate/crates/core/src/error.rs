use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("regime violation: {0}")]
    Regime(String),

    #[error("epsilon {eps} outside the admissible window ({lo}, {hi}) for k = {k}")]
    EpsilonWindow { eps: f64, k: f64, lo: f64, hi: f64 },

    #[error("inconsistent limit constants: {0}")]
    Inconsistent(String),

    #[error("missing limit constants: {0}")]
    MissingConstants(String),

    #[error("unsupported schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
