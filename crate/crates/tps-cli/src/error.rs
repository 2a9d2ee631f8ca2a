//! CLI error taxonomy mapped onto process exit codes.

use std::fmt;

/// Exit codes: 0 success, 1 validation/domain error, 2 I/O error, 3 numerical
/// failure.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or domain input (exit 1).
    Validation(String),
    /// Filesystem problems (exit 2).
    Io(String),
    /// Numerical failure inside a solver or sampler (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
            CliError::Numerical(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tps_core::Error> for CliError {
    fn from(e: tps_core::Error) -> Self {
        use tps_core::Error::*;
        match e {
            InvalidInput(m) | Config(m) => CliError::Validation(m),
            Numerical(m) | NonConvergence(m) | Degenerate(m) => CliError::Numerical(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
