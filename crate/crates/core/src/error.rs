use thiserror::Error;

use crate::pipeline::params::ConstraintReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("operation requires an exact-mode source")]
    UnsupportedMode,

    #[error("enumeration guard: {what} needs {needed} evaluations, budget is {budget}")]
    Guard { what: String, needed: u128, budget: u128 },

    #[error("search failed after {trials} trials; best worst-case error {best_eps}")]
    SearchFailure { trials: usize, best_eps: f64 },

    #[error("constraint violation: {}", .0.violations().join(", "))]
    Constraint(Box<ConstraintReport>),

    #[error("insufficient blocks: round {round} needs a fresh {source_name} block")]
    InsufficientBlocks { round: usize, source_name: &'static str },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

/// Fails with [`Error::Guard`] when `needed` exceeds `budget`.
pub(crate) fn guard(what: &str, needed: u128, budget: u128) -> Result<()> {
    if needed > budget {
        return Err(Error::Guard {
            what: what.to_string(),
            needed,
            budget,
        });
    }
    Ok(())
}
