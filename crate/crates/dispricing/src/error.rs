//! Crate-wide error type.
//!
//! Errors fall into a few coarse classes that the CLI maps onto exit codes:
//! everything here except [`Error::Infeasible`] is a caller mistake (bad
//! input, bad file, misshaped data) and exits with code 1; infeasibility
//! means the market itself admits no solution under the given parameters
//! and exits with code 2.

use thiserror::Error;

/// Failure modes shared across the solver, the oracles, and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument is outside the function's domain (negative
    /// energy, negative price, unsupported exponent, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Vectors that must align per user do not, or a guard on problem
    /// size was violated.
    #[error("structural error: {0}")]
    Structural(String),

    /// The market instance violates one or more model invariants. Each
    /// entry names a single violated invariant.
    #[error("invalid market instance:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    /// No solution exists under the given parameters (negative
    /// discriminant, no root bracket, unreachable budget target).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A configuration file could not be read or parsed.
    #[error("config error: {0}")]
    Config(String),

    /// Plain I/O failure while reading or writing a report.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code the CLI reports for this error: 2 for infeasibility,
    /// 1 for every other failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) => 2,
            _ => 1,
        }
    }
}
