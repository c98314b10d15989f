//! Error type shared across the suite.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("unsupported DS regime: lambda = -1 (elliptic-hyperbolic case)")]
    UnsupportedDsRegime,

    #[error("numerical blow-up at step {step}, t = {time}: {what}")]
    Blowup { step: usize, time: f64, what: String },

    #[error("snapshot format: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
