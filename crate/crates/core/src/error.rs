use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("edge ({p}, {q}) has non-positive or non-finite weight {w}")]
    BadWeight { p: usize, q: usize, w: f64 },

    #[error("graph is empty")]
    EmptyGraph,

    #[error("graph is disconnected ({0} components)")]
    Disconnected(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("node {0} has an all-zero test-vector row; affinity undefined")]
    ZeroRow(usize),

    #[error("node {0} has zero degree")]
    ZeroDegree(usize),

    #[error("right-hand side is not orthogonal to the all-ones vector (sum {sum:e})")]
    NotOrthogonal { sum: f64 },

    #[error("linear solve did not converge: relative residual {residual:e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("graph with {n} nodes exceeds dense eigensolver limit {limit}")]
    TooLargeForDense { n: usize, limit: usize },

    #[error("coarsest graph has {n} nodes, fewer than the {k} requested eigenvectors; lower the reduction ratio")]
    CoarsestTooSmall { n: usize, k: usize },

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("zero vector")]
    ZeroVector,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures of the numerical kernels rather than of input or usage.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::Eigen(_)
                | Error::ZeroRow(_)
                | Error::ZeroDegree(_)
                | Error::TooLargeForDense { .. }
                | Error::CoarsestTooSmall { .. }
                | Error::ZeroVector
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
