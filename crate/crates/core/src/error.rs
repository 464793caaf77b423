//! Error types shared across the simulator.

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum SimError {
    /// An argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The configuration file could not be parsed.
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    /// One or more configuration fields failed validation.
    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    /// A runtime invariant check failed. Indicates a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl SimError {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        SimError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::InvalidArgument(_) | SimError::Parse { .. } | SimError::Validation(_) => 2,
            SimError::Io { .. } => 3,
            SimError::Invariant(_) => 4,
        }
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
