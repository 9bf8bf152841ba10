use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("group descriptor mismatch: expected `{expected}`, found `{found}`")]
    DescriptorMismatch { expected: String, found: String },

    #[error("manifold mismatch: expected `{expected}`, found `{found}`")]
    ManifoldMismatch { expected: String, found: String },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("logarithm requested at rotation angle {angle} which is at or beyond the branch cut")]
    BranchCut { angle: f64 },

    #[error("no principal logarithm: {0}")]
    NoPrincipalLog(&'static str),

    #[error("consistency failure in {what}: residual {residual:e}")]
    Consistency { what: &'static str, residual: f64 },

    #[error("matrix is singular: {0}")]
    Singular(&'static str),

    #[error("action is not transitive here: rank {rank} < manifold dimension {expected}")]
    Transitivity { rank: usize, expected: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("origin lift violates stabilizer compatibility: residual {residual:e} at stabilizer {witness_stabilizer:?}, input {witness_input:?}")]
    StabilizerIncompatible {
        residual: f64,
        witness_stabilizer: Vec<f64>,
        witness_input: Vec<f64>,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("integration failed at t = {t}: {source}")]
    Integration { t: f64, source: Box<Error> },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
