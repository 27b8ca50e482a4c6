//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, LexError>;

#[derive(Debug, Error)]
pub enum LexError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown token `{0}`")]
    UnknownToken(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("{0}")]
    Numeric(String),
}

impl LexError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LexError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        LexError::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Exit code the CLI maps this error to: usage problems are handled by
    /// the argument parser before execution, so everything here is data.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
