use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("malformed config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] compgeo_core::Error),
}

impl CliError {
    /// 2 for anything the caller can fix by changing the input, 1 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        use compgeo_core::Error as E;
        match self {
            CliError::Core(E::Integration { .. } | E::Quadrature { .. }) => 1,
            CliError::Io { .. } => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type CliResult<T> = Result<T, CliError>;
