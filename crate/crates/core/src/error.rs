use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SffError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("Hilbert space dimension {base}^{power} exceeds the budget of {budget}")]
    Budget { base: usize, power: u32, budget: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric failure in realization {realization} (seed {seed}): {reason}")]
    Numeric {
        realization: u64,
        seed: u64,
        reason: String,
    },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("not enough realizations: need at least 2, have {0}")]
    TooFewRealizations(u64),

    #[error("undefined regime: {0}")]
    UndefinedRegime(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = SffError> = std::result::Result<T, E>;
