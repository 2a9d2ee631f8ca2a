//! Error types shared by the solver, surrogate, and sampling layers.

use thiserror::Error;

/// Failure modes of the library operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical operation produced an unusable result (non-finite value,
    /// failed linear solve, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An iterative procedure hit its cap before reaching the tolerance.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// A particle ensemble collapsed onto a single state.
    #[error("degenerate ensemble: {0}")]
    Degenerate(String),

    /// Inconsistent configuration (e.g. a loss weight on an undefined term).
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
