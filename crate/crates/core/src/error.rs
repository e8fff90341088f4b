use thiserror::Error;

use crate::regime::RowFailure;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("table rows failed validation:\n{}", .0.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("\n"))]
    Table(Vec<RowFailure>),
    #[error("simulation aborted at step {step}: {message}")]
    Simulation { step: usize, message: String },
    #[error("fixed-point iteration diverged: {0}")]
    Divergence(String),
    #[error("regime mismatch: {0}")]
    Regime(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code for command-line use: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
