use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the models, solvers and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate channel for user {user}: all frequency gains vanish")]
    DegenerateChannel { user: usize },

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("adaptive quadrature failed: {0}")]
    IntegrationFailure(String),

    #[error("utility admits no isolated positive root of beta*gamma'(beta) - gamma(beta)")]
    NoEquilibrium,

    #[error("no sign change of {what} in [{lo}, {hi}]")]
    NoSolutionInBracket { what: &'static str, lo: f64, hi: f64 },

    #[error("load alpha = {alpha} violates {bound} (limit {limit})")]
    InfeasibleLoad {
        alpha: f64,
        bound: &'static str,
        limit: f64,
    },

    #[error("user {user} requires power {power:e} above pmax = {pmax:e}")]
    FeasibilityViolation { user: usize, power: f64, pmax: f64 },

    #[error("permutation signal {signal} out of range for K = {k}")]
    InvalidSignal { signal: u128, k: usize },

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
