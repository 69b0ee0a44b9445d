//! Manifest loading, command drivers and report rendering for the `algebroid` binary.

pub mod commands;
pub mod manifest;
pub mod render;

/// Stable process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const INPUT: i32 = 2;
}

/// Errors that abort a command before any report is produced.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or malformed input: exit code 2.
    #[error("{0}")]
    Input(String),
    /// A mathematical precondition failed (singular or non-positive metric): exit code 1.
    #[error("{0}")]
    Math(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => exit::INPUT,
            CliError::Math(_) => exit::FAILURE,
        }
    }
}

impl From<algebroid::Error> for CliError {
    fn from(e: algebroid::Error) -> Self {
        use algebroid::Error as E;
        match e {
            E::NotPositiveDefinite { .. } | E::Singular { .. } | E::Degenerate(_) | E::Eval { .. } => {
                CliError::Math(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
