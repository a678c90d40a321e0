//! Scoring and decoding whole corpora.

use rayon::prelude::*;

use crate::decoder::{decode_cle, decode_greedy, decode_tree};
use crate::error::Result;
use crate::matrix_tree::tree_log_prob;
use crate::scorer::EdgeScorer;
use crate::types::{Dialogue, LabeledTree, Mode};

#[derive(Clone, Debug, PartialEq)]
pub struct Parse {
    pub id: String,
    pub tree: LabeledTree,
    pub log_prob: f64,
}

/// Decodes every dialogue in parallel, returning parses in input order.
///
/// `mode` picks the decoder: greedy head selection for chronological, full
/// Chu-Liu-Edmonds for general. `None` follows each tensor's own mode.
pub fn parse_dialogues(scorer: &dyn EdgeScorer, dialogues: &[Dialogue], mode: Option<Mode>) -> Result<Vec<Parse>> {
    dialogues
        .par_iter()
        .map(|d| {
            let run = || -> Result<Parse> {
                let theta = scorer.score(d)?;
                let tree = match mode {
                    None => decode_tree(&theta)?,
                    Some(Mode::Chronological) => decode_greedy(&theta)?,
                    Some(Mode::General) => decode_cle(&theta)?,
                };
                let log_prob = tree_log_prob(&theta, &tree)?;
                Ok(Parse {
                    id: d.id().to_owned(),
                    tree,
                    log_prob,
                })
            };
            run().map_err(|e| e.in_dialogue(d.id()))
        })
        .collect()
}
