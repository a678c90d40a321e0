//! Turns annotated discourse graphs into trees.
//!
//! A node with several parents keeps only its latest one (largest head
//! index); when the same link appears with two relations the one listed
//! last wins. Parentless nodes are attached to the dummy root with the root
//! relation.

use std::ops::AddAssign;

use crate::types::{Dialogue, DiscoursePair, LabelSet, LabeledTree};

/// Relation id used for dummy-root attachments.
pub fn root_relation_policy(labels: &LabelSet) -> usize {
    labels.root_id()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TreeifyReport {
    /// Gold edges in the input.
    pub input_edges: usize,
    /// Gold edges dropped by the latest-parent rule.
    pub discarded: usize,
    /// Nodes that had no parent and were attached to the root.
    pub root_attached: usize,
}

impl TreeifyReport {
    /// Share of input edges that were discarded; 0 for edgeless input.
    pub fn discard_fraction(&self) -> f64 {
        if self.input_edges == 0 {
            0.0
        } else {
            self.discarded as f64 / self.input_edges as f64
        }
    }
}

impl AddAssign for TreeifyReport {
    fn add_assign(&mut self, rhs: Self) {
        self.input_edges += rhs.input_edges;
        self.discarded += rhs.discarded;
        self.root_attached += rhs.root_attached;
    }
}

pub fn treeify(dialogue: &Dialogue, root_relation: usize) -> (LabeledTree, TreeifyReport) {
    let n = dialogue.len();
    let mut kept: Vec<Option<DiscoursePair>> = vec![None; n + 1];
    for e in dialogue.gold_edges() {
        let slot = &mut kept[e.dependent];
        if slot.is_none_or(|k| e.head >= k.head) {
            *slot = Some(*e);
        }
    }
    let mut report = TreeifyReport {
        input_edges: dialogue.gold_edges().len(),
        ..Default::default()
    };
    let edges: Vec<DiscoursePair> = (1..=n)
        .map(|m| {
            kept[m].unwrap_or_else(|| {
                report.root_attached += 1;
                DiscoursePair::new(0, m, root_relation)
            })
        })
        .collect();
    report.discarded = report.input_edges - (n - report.root_attached);
    (LabeledTree::new(n, edges), report)
}
