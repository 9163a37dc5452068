use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),

    #[error("hop bound must be at least 1, got {0}")]
    InvalidHopBound(usize),

    #[error("node count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty mask")]
    EmptyMask,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("graph has {edges} edges, brute force is limited to {limit}")]
    TooManyEdges { edges: usize, limit: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
