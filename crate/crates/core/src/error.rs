use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("outcome space must have between 1 and {max} outcomes, got {got}")]
    SpaceSize { got: usize, max: usize },

    #[error("duplicate outcome label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown outcome label `{0}`")]
    UnknownLabel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("invalid equilibrium combinations: {0}")]
    InvalidCombos(String),

    #[error("invalid capacity: {0}")]
    InvalidCapacity(String),

    #[error("invalid permutation of {0} elements")]
    InvalidPermutation(usize),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("method `{method}` cannot be used here: {reason}")]
    Incompatible { method: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
