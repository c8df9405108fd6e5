use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or parameter shapes disagree.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: String,
        expected: String,
        actual: String,
    },

    /// A precondition of an operation was not met.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Malformed IDX input.
    #[error("IDX parse error at byte offset {offset}: {reason}")]
    Idx { offset: usize, reason: String },

    /// Malformed binary history record.
    #[error("history record error at byte offset {offset}: {reason}")]
    Record { offset: usize, reason: String },

    /// A loss or gradient became NaN/Inf during local training.
    #[error("non-finite {what} at round {round}, client {client}, epoch {epoch}, batch {batch}")]
    NonFinite {
        what: &'static str,
        round: usize,
        client: usize,
        epoch: usize,
        batch: usize,
    },

    /// A data partition could not be built.
    #[error("partition error: {0}")]
    Partition(String),

    /// Invalid experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(
        context: impl Into<String>,
        expected: impl ToString,
        actual: impl ToString,
    ) -> Self {
        Error::Shape {
            context: context.into(),
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

pub type Result<T> = std::result::Result<T, Error>;
