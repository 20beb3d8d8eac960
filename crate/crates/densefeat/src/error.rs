//! Error type shared by the library and the CLI.

use std::path::{Path, PathBuf};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed binary file; `offset` is the byte position the parser stopped at.
    #[error("{path}: invalid data at byte {offset}: {msg}")]
    Format {
        path: PathBuf,
        offset: u64,
        msg: String,
    },
    /// Malformed text file; `line` is 1-based.
    #[error("{path}:{line}: {msg}")]
    Text {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Param(String),
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().to_path_buf(),
            offset,
            msg: msg.into(),
        }
    }

    pub fn text(path: impl AsRef<Path>, line: usize, msg: impl Into<String>) -> Self {
        Error::Text {
            path: path.as_ref().to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    pub fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// CLI exit code: configuration problems map to 3, all other failures to 2.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 3,
            _ => 2,
        }
    }
}
