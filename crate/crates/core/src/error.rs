use std::io;

use thiserror::Error;

use crate::types::TreeViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by inference, decoding, training and corpus handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no permitted head for node {node}")]
    EmptySupport { node: usize },

    #[error("edge ({head}, {dependent}, {relation}) is forbidden by the score tensor")]
    ForbiddenEdge {
        head: usize,
        dependent: usize,
        relation: usize,
    },

    #[error("invalid tree: {0}")]
    InvalidTree(TreeViolation),

    #[error("singular matrix (smallest pivot {pivot:e}, condition estimate {condition:e})")]
    Singular { pivot: f64, condition: f64 },

    #[error("Laplacian minor has a non-positive determinant (condition estimate {condition:e})")]
    NonPositiveDeterminant { condition: f64 },

    #[error("no spanning arborescence exists: node {node} cannot be reached from the root")]
    NoSpanningTree { node: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite score at ({head}, {dependent}, {relation})")]
    NonFinite {
        head: usize,
        dependent: usize,
        relation: usize,
    },

    #[error(
        "mask violation: edge ({head}, {dependent}) is permitted but chronological mode requires head < dependent"
    )]
    MaskViolation { head: usize, dependent: usize },

    #[error("relation vocabulary mismatch: expected [{}], found [{}]", expected.join(", "), found.join(", "))]
    VocabularyMismatch { expected: Vec<String>, found: Vec<String> },

    #[error("unknown relation labels: {}", .0.join(", "))]
    UnknownRelations(Vec<String>),

    #[error("invalid relation vocabulary: {0}")]
    Vocabulary(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no dialogues found")]
    EmptyCorpus,

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dialogue {id}: {message}")]
    Mismatch { id: String, message: String },

    #[error("dialogue {id}: {source}")]
    InDialogue {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an error with the id of the dialogue that produced it.
    pub fn in_dialogue(self, id: &str) -> Error {
        match self {
            e @ Error::InDialogue { .. } => e,
            e => Error::InDialogue {
                id: id.to_owned(),
                source: Box::new(e),
            },
        }
    }

    /// True for failures of the numerical core (singular systems, divergence).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singular { .. } | Error::NonPositiveDeterminant { .. } | Error::Divergence { .. } => true,
            Error::InDialogue { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
