//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node id {id} out of range for graph with {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("non-positive weight {w} on edge ({u}, {v})")]
    NonPositiveWeight { u: usize, v: usize, w: f64 },

    #[error("self edge ({0}, {0}) is not allowed in input graphs")]
    SelfEdge(usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("cannot add {requested} noise edges: only {available} non-edges remain")]
    InsufficientNonEdges { requested: usize, available: usize },

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("class {class} has no nodes; cannot build a stratified split")]
    EmptyClass { class: usize },

    #[error("labeled fraction {0} must lie strictly between 0 and 1")]
    BadLabeledFraction(f64),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid synthetic graph parameters: {0}")]
    InvalidSyntheticSpec(String),

    #[error("synthetic parameters produced an empty graph")]
    EmptySyntheticGraph,

    #[error("entmax input must be a non-empty vector of finite values")]
    BadEntmaxInput,

    #[error("alpha {0} is outside the supported range")]
    BadAlpha(f64),

    #[error("no sorted closed-form solver for alpha = {0}; supported: 1.5 and 2.0")]
    UnsupportedOracleAlpha(f64),

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no labeled nodes available for the cross-entropy loss")]
    NoLabeledNodes,

    #[error("no unlabeled nodes to evaluate")]
    NoUnlabeledNodes,

    #[error("non-finite gradient in {location}")]
    NonFiniteGradient { location: String },

    #[error("training diverged at epoch {epoch}: {msg}")]
    Diverged { epoch: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown node id {0} in attention export request")]
    UnknownExportNode(usize),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
