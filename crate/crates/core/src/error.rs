use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain descriptor `{0}`")]
    InvalidDescriptor(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("point is not in {domain}: {detail}")]
    OutsideDomain { domain: String, detail: String },

    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical guard tripped: {0}")]
    NumericalGuard(String),

    #[error("non-finite integrand value {value} at sample {index}")]
    NonFinite { index: u64, value: f64 },

    #[error("sample cache: {0}")]
    Cache(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
