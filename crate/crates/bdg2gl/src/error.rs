//! Crate-wide error type and result alias.

use thiserror::Error;

/// Errors produced by the solvers and drivers.
///
/// The CLI maps variants to exit codes: configuration problems exit
/// with 2, convergence failures with 3, numerical violations of the
/// spectral assumptions with 4, everything else with 1.
#[derive(Error, Debug)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("convergence failure after {iterations} iterations (last residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("assumption violation: {0}")]
    AssumptionViolation(String),

    #[error("bifurcation point: {0}")]
    Bifurcation(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parameter(_) => 2,
            Error::Convergence { .. } => 3,
            Error::AssumptionViolation(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
