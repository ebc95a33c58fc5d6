use std::fmt;

use zoll_core::error::Error as CoreError;

/// Failures of a subcommand, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or config values.
    #[error("usage: {0}")]
    Usage(String),
    /// A file that does not parse or has the wrong schema.
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// The numerics refused or failed.
    #[error("numerical failure: {0}")]
    Numerical(#[from] CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 1,
            _ => 2,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::Usage(msg.to_string())
    }

    pub fn format(path: &str, msg: impl fmt::Display) -> Self {
        CliError::Format {
            path: path.to_string(),
            message: msg.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
