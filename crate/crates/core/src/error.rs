use thiserror::Error;

use crate::join::FilterStats;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exact oracle is capped at {cap} vertices, graph has {n}")]
    OracleCap { n: usize, cap: usize },

    #[error("propagation support {support} exceeds cap {cap}")]
    SupportCap { support: usize, cap: usize },

    #[error("residual store exceeded {cap} entries ({} pushes done)", stats.pushes)]
    MemoryCap { cap: usize, stats: Box<FilterStats> },

    #[error("diagonal has {found} entries but graph has {expected} vertices")]
    LengthMismatch { expected: usize, found: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
