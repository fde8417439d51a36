use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the hosting-capacity pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("edge set does not form a spanning tree rooted at bus 1: {0}")]
    GraphNotTree(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("power flow has no solution: {0}")]
    NoSolution(String),

    #[error("power flow did not converge within {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("parse error{}: {message}", location(.line))]
    Parse { line: Option<usize>, message: String },

    #[error("file contains no scenario rows")]
    EmptyFile,

    #[error("subsample count {requested} outside 1..={available}")]
    BadCount { requested: usize, available: usize },

    #[error("usage: {0}")]
    Usage(String),

    #[error("risk level {0} outside [0, 1)")]
    BadDelta(f64),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("network violates the risk constraints even without solar (psi = 0)")]
    BaseInfeasible,

    #[error("invalid infeasibility certificate: {0}")]
    InvalidCertificate(String),

    #[error("knowledge base provenance mismatch: {0}")]
    ProvenanceMismatch(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("shadow audit disagreement: {0}")]
    ShadowDisagreement(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn location(line: &Option<usize>) -> String {
    match line {
        Some(l) => format!(" at line {l}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn dims(message: impl Into<String>) -> Self {
        Error::DimensionMismatch(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
