use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty edge map")]
    EmptyEdgeMap,
    #[error("pixel ({row}, {col}) out of bounds for {height}x{width} edge map")]
    PixelOutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("graph too large for exhaustive cycle enumeration ({nodes} nodes, limit {limit})")]
    CycleEnumerationTooLarge { nodes: usize, limit: usize },
    #[error("instance too large for exact solver ({nodes} nodes, limit {limit})")]
    ExactSolverTooLarge { nodes: usize, limit: usize },
    #[error("potential overflow: non-finite exponent at edge {edge}")]
    PotentialOverflow { edge: usize },
    #[error("empty instance set")]
    EmptyInstanceSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
