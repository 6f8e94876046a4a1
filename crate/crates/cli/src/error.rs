use std::path::PathBuf;

use thiserror::Error;
use wnv_core::WnvError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid `{name}`: {reason}")]
    Invalid { name: String, reason: String },

    #[error(transparent)]
    Model(#[from] WnvError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn invalid(name: &str, reason: &str) -> Self {
        CliError::Invalid {
            name: name.to_string(),
            reason: reason.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
