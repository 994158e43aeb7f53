use std::path::PathBuf;

use thiserror::Error;

use crate::gamp::TraceRow;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("index {index} out of range for {context} of length {len}")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        len: usize,
    },

    #[error("message passing diverged at iteration {iteration}")]
    Diverged {
        iteration: usize,
        trace: Vec<TraceRow>,
    },

    #[error("trial {trial} of cell {cell} failed: {source}")]
    Trial {
        cell: String,
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("failure rate {rate:.3} in cell {cell} exceeds the 5% limit ({failures}/{attempted})")]
    FailureRate {
        cell: String,
        failures: usize,
        attempted: usize,
        rate: f64,
    },

    #[error("target false-alarm ratio {target} outside achievable range [{min}, {max}]")]
    OutOfRange { target: f64, min: f64, max: f64 },

    #[error("trial has no active users")]
    Degenerate,

    #[error("numerical integration did not converge: {0}")]
    Quadrature(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn dims(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
