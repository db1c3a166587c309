use std::path::{Path, PathBuf};

use gazenotice_core::Error as CoreError;

/// Errors from file handling and command execution.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl Error {
    /// Process exit code: 1 for bad input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Write { .. } => 2,
            Error::Core(e) if !e.is_validation() => 2,
            _ => 1,
        }
    }

    pub(crate) fn read(path: &Path, source: std::io::Error) -> Self {
        Error::Read { path: path.to_path_buf(), source }
    }

    pub(crate) fn write(path: &Path, source: std::io::Error) -> Self {
        Error::Write { path: path.to_path_buf(), source }
    }

    pub(crate) fn parse(path: &Path, line: usize, message: impl ToString) -> Self {
        Error::Parse { path: path.to_path_buf(), line, message: message.to_string() }
    }

    pub(crate) fn schema(path: &Path, message: impl Into<String>) -> Self {
        Error::Schema { path: path.to_path_buf(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
