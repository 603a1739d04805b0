use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator and its harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("learning parameter gamma must lie in (0, 1), got {0}")]
    InvalidGamma(f64),

    #[error("invalid source: {0}")]
    InvalidSource(String),

    #[error("wiring fault: {0}")]
    Wiring(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// True for errors caused by user-supplied settings rather than the environment.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidGamma(_)
                | Error::InvalidSource(_)
                | Error::Config(_)
                | Error::InvalidArgument(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
