use thiserror::Error;

/// Errors produced by graph construction, parsing, composition and the
/// brute-force oracle.
#[derive(Debug, Error)]
pub enum Error {
    #[error("arc {arc}: node {node} out of range (graph has {num_nodes} nodes)")]
    ArcNodeOutOfRange { arc: usize, node: u32, num_nodes: usize },

    #[error("node {node} out of range (graph has {num_nodes} nodes)")]
    NodeOutOfRange { node: usize, num_nodes: usize },

    #[error("arc {arc}: invalid label {label} (labels must be >= -1)")]
    InvalidLabel { arc: usize, label: i32 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("composed graph carries {keys} pair keys for {nodes} nodes")]
    MissingPairKeys { keys: usize, nodes: usize },

    #[error("lexicon: {0}")]
    Lexicon(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
