use thiserror::Error;

use crate::scenario::Violation;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation failed: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible action {action:?}: {reason}")]
    InfeasibleAction { action: Vec<u32>, reason: String },

    /// Every state assigned zero likelihood to the observation.
    #[error("degenerate likelihood: observation has zero density under every state")]
    DegenerateLikelihood,

    #[error("value iteration did not converge after {iterations} sweeps (span {span:.3e})")]
    NonConvergence { iterations: usize, span: f64 },

    #[error("value table has no tangents; compute them before evaluating the upper bound")]
    MissingTangents,

    #[error("table/scenario mismatch: {0}")]
    Mismatch(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
