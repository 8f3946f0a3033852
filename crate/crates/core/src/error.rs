use std::io;

use thiserror::Error;

pub type Result<T, E = AsapError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AsapError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("timestamp regression at index {index}: {current} after {previous}")]
    Ordering { index: u64, previous: u64, current: u64 },

    #[error("{function} is undefined at {value}")]
    Domain { function: &'static str, value: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("scripted workload exhausted after {0} packages")]
    ScriptExhausted(usize),

    #[error("no fixed point in [{lo}, {hi}]: f(g(s)) - s is {sign} at both ends")]
    NoFixedPoint { lo: f64, hi: f64, sign: &'static str },

    #[error("settling iterations undefined: {0}")]
    UndefinedSettling(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}
