//! Probability distributions over labeled multi-root spanning trees, applied
//! to dialogue discourse parsing.
//!
//! The pieces, in pipeline order:
//!
//! - [`corpus`] reads STAC/Molweni-shaped files and writes the canonical
//!   line-delimited format.
//! - [`preprocess::treeify`] turns annotated discourse graphs into trees.
//! - [`scorer`] produces score tensors: a featurized linear model, or
//!   tensors computed elsewhere and imported.
//! - [`matrix_tree`] gives `log Z` and edge marginals via the directed
//!   Matrix-Tree theorem.
//! - [`trainer`] fits the linear scorer by gold-tree likelihood.
//! - [`decoder`] finds the best labeled tree.
//! - [`eval`] computes UAS/LAS with length and relation breakdowns.
//!
//! ```
//! use discotree::{decode_tree, log_partition, Mode, ScoreTensor};
//!
//! // every score 0: Z counts the 3! chronological trees over 3 utterances
//! let theta = ScoreTensor::zeros(3, 1, Mode::Chronological);
//! let log_z = log_partition(&theta).unwrap().log_z;
//! assert!((log_z - 6f64.ln()).abs() < 1e-12);
//! assert_eq!(decode_tree(&theta).unwrap().head_of(3), Some(0));
//! ```

pub mod cli;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod matrix_tree;
pub mod oracle;
pub mod pipeline;
pub mod preprocess;
pub mod scorer;
pub mod synth;
pub mod trainer;
pub mod types;
pub mod verify;

pub use decoder::{best_relation_reduce, decode_optimality_check, decode_tree};
pub use error::{Error, Result};
pub use eval::{evaluate, EvalConfig, EvalReport};
pub use matrix_tree::{inference, log_partition, marginals, tree_log_prob, tree_log_score};
pub use preprocess::{root_relation_policy, treeify};
pub use scorer::{EdgeScorer, FeatureSpace, LinearScorerModel};
pub use trainer::{loss_and_gradient, train, TrainConfig};
pub use types::{
    validate_tree, Dialogue, DiscoursePair, LabelSet, LabeledTree, MarginalTensor, Mode, RelationVocab, ScoreTensor,
    Utterance,
};
