use thiserror::Error;

/// Errors raised by the search engine and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cell shape: {0}")]
    InvalidShape(String),
    #[error("invalid genome at node {node}: {reason}")]
    InvalidGenome { node: usize, reason: String },
    #[error("malformed cell dag at node {node}: {reason}")]
    MalformedDag { node: usize, reason: String },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid objective vector: {0}")]
    InvalidObjectives(String),
    #[error("architecture {0} is not present in the tabular benchmark")]
    MissingKey(String),
    #[error("surrogate evaluation requires a supernet state")]
    AbsentState,
    #[error("individual {0} has not been evaluated")]
    Unevaluated(u64),
    #[error("similarity depth {depth} is out of range for a population of {size}")]
    DepthOutOfRange { depth: usize, size: usize },
    #[error("adjacent distance is undefined for a layer and itself (layer {0})")]
    SameLayer(usize),
    #[error("requested {requested} migrants from an archive of {available}")]
    CountExceedsArchive { requested: usize, available: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported {what} format version {found} (expected {expected})")]
    VersionMismatch {
        what: &'static str,
        found: String,
        expected: u32,
    },
    #[error("search space holds {size} architectures, above the enumeration cap of {cap}")]
    CapExceeded { size: u128, cap: u128 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
