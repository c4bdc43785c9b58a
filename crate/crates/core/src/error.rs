use thiserror::Error;

use crate::model::{Solution, VertexId, Violation};

#[derive(Debug, Error)]
pub enum DsopError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("instance failed validation: {}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported distribution: {0}")]
    UnsupportedDistribution(String),

    #[error("no edge {from} -> {to}")]
    MissingEdge { from: VertexId, to: VertexId },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("exact enumeration needs more than {cap} outcomes")]
    OutcomeCap { cap: usize },

    #[error("no feasible solution: even the direct start -> exit path violates the chance constraint")]
    NoFeasibleSolution,

    #[error("node budget of {budget} exhausted")]
    Timeout { budget: u64, best: Option<Box<Solution>> },

    #[error("instance generation failed: {0}")]
    Generation(String),
}

fn format_violations(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = DsopError> = std::result::Result<T, E>;
