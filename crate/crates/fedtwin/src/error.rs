//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// The variants are grouped by failure class so callers (notably the CLI)
/// can map them to stable exit codes without string matching.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or sequence dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// Invalid configuration value(s). The message names the offending
    /// field(s).
    #[error("config error: {0}")]
    Config(String),

    /// Bad input data. `line` is the 1-based line number in the source file
    /// when the error comes from a file row.
    #[error("data error{}: {msg}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Data {
        line: Option<usize>,
        msg: String,
    },

    /// Malformed byte buffer. `offset` is the byte position at which the
    /// buffer stopped making sense.
    #[error("format error at byte {offset}: {msg}")]
    Format { offset: usize, msg: String },

    /// A peer violated the message protocol.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// An operation was called in the wrong order (e.g. backward without a
    /// matching forward).
    #[error("state error: {0}")]
    State(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(line: impl Into<Option<usize>>, msg: impl Into<String>) -> Self {
        Error::Data {
            line: line.into(),
            msg: msg.into(),
        }
    }

    pub fn format(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            offset,
            msg: msg.into(),
        }
    }

    pub fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    pub fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
