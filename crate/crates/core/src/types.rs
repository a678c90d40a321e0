//! Shared data model: relation vocabularies, dialogues, labeled trees and
//! score/marginal tensors.
//!
//! Node 0 is always the dummy root. Utterances are numbered `1..=n` in
//! chronological order.

use std::collections::HashMap;
use std::fmt;

use ndarray::{Array3, ArrayView3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label used for dummy-root attachments when no corpus label is configured.
pub const RESERVED_ROOT_LABEL: &str = "<root>";

/// Closed, ordered set of relation labels with stable integer ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationVocab {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl RelationVocab {
    /// Ids are assigned in the order the labels are given.
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Vocabulary("vocabulary is empty".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (id, label) in labels.iter().enumerate() {
            if label.trim().is_empty() {
                return Err(Error::Vocabulary(format!("label {id} is empty")));
            }
            if index.insert(label.clone(), id).is_some() {
                return Err(Error::Vocabulary(format!("duplicate label {label:?}")));
            }
        }
        Ok(RelationVocab { labels, index })
    }

    /// Reads one label per line; blank lines and `#` comments are skipped.
    pub fn from_lines(text: &str) -> Result<Self> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Corpus vocabulary plus the relation used for dummy-root attachments.
///
/// By default the root relation is a reserved synthetic label with id `R`,
/// one past the corpus vocabulary. A corpus label may be designated instead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    vocab: RelationVocab,
    root: usize,
}

impl LabelSet {
    pub fn reserved(vocab: RelationVocab) -> Self {
        let root = vocab.len();
        LabelSet { vocab, root }
    }

    pub fn with_root_label(vocab: RelationVocab, root_label: &str) -> Result<Self> {
        let root = vocab
            .id(root_label)
            .ok_or_else(|| Error::UnknownRelations(vec![root_label.to_owned()]))?;
        Ok(LabelSet { vocab, root })
    }

    pub fn vocab(&self) -> &RelationVocab {
        &self.vocab
    }

    pub fn root_id(&self) -> usize {
        self.root
    }

    pub fn has_reserved_root(&self) -> bool {
        self.root == self.vocab.len()
    }

    /// Size of the relation axis of score tensors built for this label set.
    pub fn num_labels(&self) -> usize {
        if self.has_reserved_root() {
            self.vocab.len() + 1
        } else {
            self.vocab.len()
        }
    }

    pub fn is_root(&self, id: usize) -> bool {
        id == self.root
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        if self.has_reserved_root() && id == self.root {
            Some(RESERVED_ROOT_LABEL)
        } else {
            self.vocab.label(id)
        }
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        match self.vocab.id(label) {
            Some(id) => Some(id),
            None if self.has_reserved_root() && label == RESERVED_ROOT_LABEL => Some(self.root),
            None => None,
        }
    }

    /// All label names, indexed by id, including the reserved root label.
    pub fn names(&self) -> Vec<String> {
        (0..self.num_labels())
            .map(|id| self.label(id).unwrap_or_default().to_owned())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub index: usize,
    pub speaker: Option<String>,
    pub text: String,
}

/// A discourse pair `(head, dependent, relation)` with `head < dependent`
/// in chronological dialogues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiscoursePair {
    pub head: usize,
    pub dependent: usize,
    pub relation: usize,
}

impl DiscoursePair {
    pub fn new(head: usize, dependent: usize, relation: usize) -> Self {
        DiscoursePair {
            head,
            dependent,
            relation,
        }
    }
}

impl fmt::Display for DiscoursePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.head, self.dependent, self.relation)
    }
}

/// An ordered sequence of utterances plus gold discourse edges.
///
/// Gold edges keep their source order; before preprocessing they may form
/// a general DAG.
#[derive(Clone, Debug, PartialEq)]
pub struct Dialogue {
    id: String,
    utterances: Vec<Utterance>,
    gold_edges: Vec<DiscoursePair>,
}

impl Dialogue {
    pub fn new(id: impl Into<String>, utterances: Vec<Utterance>, gold_edges: Vec<DiscoursePair>) -> Result<Self> {
        let id = id.into();
        let bad = |message: String| Error::Mismatch {
            id: id.clone(),
            message,
        };
        for (pos, u) in utterances.iter().enumerate() {
            if u.index != pos + 1 {
                return Err(bad(format!(
                    "utterance at position {pos} has index {}, expected {}",
                    u.index,
                    pos + 1
                )));
            }
        }
        let n = utterances.len();
        for e in &gold_edges {
            if e.head >= e.dependent || e.dependent > n {
                return Err(bad(format!("gold edge {e} violates 0 <= h < m <= {n}")));
            }
        }
        Ok(Dialogue {
            id,
            utterances,
            gold_edges,
        })
    }

    /// Builds utterances numbered from 1 out of `(speaker, text)` pairs.
    pub fn from_texts<I, S, T>(id: impl Into<String>, texts: I, gold_edges: Vec<DiscoursePair>) -> Result<Self>
    where
        I: IntoIterator<Item = (Option<S>, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let utterances = texts
            .into_iter()
            .enumerate()
            .map(|(i, (speaker, text))| Utterance {
                index: i + 1,
                speaker: speaker.map(Into::into),
                text: text.into(),
            })
            .collect();
        Self::new(id, utterances, gold_edges)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Number of utterances, excluding the dummy root.
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    /// Utterance `index` (1-based). Index 0 is the dummy root and has no utterance.
    pub fn utterance(&self, index: usize) -> Option<&Utterance> {
        index.checked_sub(1).and_then(|i| self.utterances.get(i))
    }

    pub fn gold_edges(&self) -> &[DiscoursePair] {
        &self.gold_edges
    }

    /// Same utterances with a different edge set.
    pub fn with_edges(&self, gold_edges: Vec<DiscoursePair>) -> Result<Self> {
        Self::new(self.id.clone(), self.utterances.clone(), gold_edges)
    }
}

/// A labeled multi-root tree over nodes `1..=n` hanging off the dummy root 0.
///
/// Construction does not validate; see [`validate_tree`]. Edges are kept
/// sorted by `(dependent, head, relation)` so equal edge sets compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabeledTree {
    n: usize,
    edges: Vec<DiscoursePair>,
}

impl LabeledTree {
    pub fn new(n: usize, mut edges: Vec<DiscoursePair>) -> Self {
        edges.sort_by_key(|e| (e.dependent, e.head, e.relation));
        LabeledTree { n, edges }
    }

    /// `parents[m - 1] = (head, relation)` for each node `m`.
    pub fn from_parents(parents: &[(usize, usize)]) -> Self {
        let edges = parents
            .iter()
            .enumerate()
            .map(|(i, &(h, r))| DiscoursePair::new(h, i + 1, r))
            .collect();
        Self::new(parents.len(), edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[DiscoursePair] {
        &self.edges
    }

    /// The first edge whose dependent is `m`.
    pub fn edge_of(&self, m: usize) -> Option<&DiscoursePair> {
        self.edges.iter().find(|e| e.dependent == m)
    }

    pub fn head_of(&self, m: usize) -> Option<usize> {
        self.edge_of(m).map(|e| e.head)
    }

    pub fn validate(&self) -> Result<(), TreeViolation> {
        validate_tree(self)
    }
}

/// The first tree invariant found to be violated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeViolation {
    EdgeOutOfRange(DiscoursePair),
    SelfLoop(DiscoursePair),
    MissingParent { node: usize },
    MultipleParents { node: usize, count: usize },
    Cycle { node: usize },
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeViolation::EdgeOutOfRange(e) => write!(f, "edge {e} is out of range"),
            TreeViolation::SelfLoop(e) => write!(f, "edge {e} is a self loop"),
            TreeViolation::MissingParent { node } => write!(f, "node {node} has no parent"),
            TreeViolation::MultipleParents { node, count } => {
                write!(f, "node {node} has {count} parents")
            }
            TreeViolation::Cycle { node } => {
                write!(f, "node {node} lies on a cycle and is unreachable from the root")
            }
        }
    }
}

impl std::error::Error for TreeViolation {}

/// Checks that every node `1..=n` has exactly one parent and that all nodes
/// reach the dummy root.
pub fn validate_tree(tree: &LabeledTree) -> Result<(), TreeViolation> {
    let n = tree.n;
    let mut parent = vec![None; n + 1];
    let mut count = vec![0usize; n + 1];
    for e in &tree.edges {
        if e.dependent == 0 || e.dependent > n || e.head > n {
            return Err(TreeViolation::EdgeOutOfRange(*e));
        }
        if e.head == e.dependent {
            return Err(TreeViolation::SelfLoop(*e));
        }
        count[e.dependent] += 1;
        parent[e.dependent] = Some(e.head);
    }
    for (m, &c) in count.iter().enumerate().skip(1) {
        match c {
            0 => return Err(TreeViolation::MissingParent { node: m }),
            1 => {}
            c => return Err(TreeViolation::MultipleParents { node: m, count: c }),
        }
    }
    // 0 = unvisited, 1 = on current path, 2 = reaches the root
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    for start in 1..=n {
        let mut path = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            path.push(v);
            v = parent[v].expect("parent counts checked above");
        }
        if state[v] == 1 {
            return Err(TreeViolation::Cycle { node: v });
        }
        for u in path {
            state[u] = 2;
        }
    }
    Ok(())
}

/// Which head/dependent pairs a score tensor may permit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Only `h < m`: every link points forward in time.
    #[default]
    Chronological,
    /// Any `h != m` with `m >= 1`: the complete digraph plus root edges.
    General,
}

impl Mode {
    pub fn allows(self, head: usize, dependent: usize) -> bool {
        dependent >= 1
            && head != dependent
            && match self {
                Mode::Chronological => head < dependent,
                Mode::General => true,
            }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Chronological => "chronological",
            Mode::General => "general",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chronological" => Ok(Mode::Chronological),
            "general" => Ok(Mode::General),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// Log-potentials `θ[h][m][r]` over `(n+1) × (n+1) × R` cells.
///
/// Forbidden cells are tracked by an explicit mask, never by an infinite
/// value. Their stored value is always 0 and must not be read as a score.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTensor {
    mode: Mode,
    values: Array3<f64>,
    permitted: Array3<bool>,
}

impl ScoreTensor {
    /// Permits every cell the mode allows and fills it from `score`.
    pub fn from_fn<F>(n: usize, num_relations: usize, mode: Mode, mut score: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        let dim = (n + 1, n + 1, num_relations);
        let permitted = Array3::from_shape_fn(dim, |(h, m, _)| mode.allows(h, m));
        let values = Array3::from_shape_fn(dim, |(h, m, r)| if mode.allows(h, m) { score(h, m, r) } else { 0.0 });
        Self::from_parts(mode, values, permitted)
    }

    pub fn zeros(n: usize, num_relations: usize, mode: Mode) -> Self {
        Self::from_fn(n, num_relations, mode, |_, _, _| 0.0).expect("zero scores are finite")
    }

    /// Validates shape, finiteness of permitted cells and the mode's mask.
    pub fn from_parts(mode: Mode, mut values: Array3<f64>, permitted: Array3<bool>) -> Result<Self> {
        let (rows, cols, rels) = values.dim();
        if rows != cols || rows == 0 {
            return Err(Error::Shape(format!(
                "score tensor must be (n+1) x (n+1) x R, got {rows} x {cols} x {rels}"
            )));
        }
        if rels == 0 {
            return Err(Error::Shape("score tensor has no relations".into()));
        }
        if permitted.dim() != values.dim() {
            return Err(Error::Shape(format!(
                "mask shape {:?} differs from value shape {:?}",
                permitted.dim(),
                values.dim()
            )));
        }
        for ((h, m, r), &ok) in permitted.indexed_iter() {
            if !ok {
                values[(h, m, r)] = 0.0;
                continue;
            }
            if m == 0 || h == m {
                return Err(Error::Shape(format!(
                    "cell ({h}, {m}, {r}) must be masked: the root has no parent and self loops are not edges"
                )));
            }
            if mode == Mode::Chronological && h > m {
                return Err(Error::MaskViolation { head: h, dependent: m });
            }
            if !values[(h, m, r)].is_finite() {
                return Err(Error::NonFinite {
                    head: h,
                    dependent: m,
                    relation: r,
                });
            }
        }
        Ok(ScoreTensor {
            mode,
            values,
            permitted,
        })
    }

    /// Number of non-root nodes.
    pub fn n(&self) -> usize {
        self.values.dim().0 - 1
    }

    pub fn num_relations(&self) -> usize {
        self.values.dim().2
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_permitted(&self, h: usize, m: usize, r: usize) -> bool {
        self.permitted.get((h, m, r)).copied().unwrap_or(false)
    }

    /// `None` for forbidden or out-of-range cells.
    pub fn get(&self, h: usize, m: usize, r: usize) -> Option<f64> {
        if self.is_permitted(h, m, r) {
            Some(self.values[(h, m, r)])
        } else {
            None
        }
    }

    pub fn values(&self) -> ArrayView3<'_, f64> {
        self.values.view()
    }

    pub fn mask(&self) -> ArrayView3<'_, bool> {
        self.permitted.view()
    }

    /// Permitted `(head, relation, score)` cells for dependent `m`, in
    /// `(head, relation)` order.
    pub fn incoming(&self, m: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let rels = self.num_relations();
        (0..=self.n()).flat_map(move |h| (0..rels).filter_map(move |r| self.get(h, m, r).map(|s| (h, r, s))))
    }

    /// Largest permitted score, `None` if nothing is permitted.
    pub fn max_permitted(&self) -> Option<f64> {
        self.values
            .iter()
            .zip(self.permitted.iter())
            .filter(|(_, &ok)| ok)
            .map(|(&v, _)| v)
            .reduce(f64::max)
    }

    /// Applies `f` to every permitted cell, keeping the mask.
    pub fn map_permitted<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize, f64) -> f64,
    {
        let mut values = self.values.clone();
        for ((h, m, r), v) in values.indexed_iter_mut() {
            if self.permitted[(h, m, r)] {
                *v = f(h, m, r, *v);
            }
        }
        Self::from_parts(self.mode, values, self.permitted.clone())
    }

    /// A copy with the given `(h, m, r)` cells forbidden.
    pub fn with_forbidden(&self, cells: &[(usize, usize, usize)]) -> Self {
        let mut permitted = self.permitted.clone();
        let mut values = self.values.clone();
        for &cell in cells {
            if let Some(p) = permitted.get_mut(cell) {
                *p = false;
                values[cell] = 0.0;
            }
        }
        ScoreTensor {
            mode: self.mode,
            values,
            permitted,
        }
    }
}

/// Edge-relation probabilities `μ[h][m][r]` under a tree distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalTensor {
    values: Array3<f64>,
}

impl MarginalTensor {
    pub(crate) fn new(values: Array3<f64>) -> Self {
        MarginalTensor { values }
    }

    pub fn n(&self) -> usize {
        self.values.dim().0 - 1
    }

    pub fn num_relations(&self) -> usize {
        self.values.dim().2
    }

    pub fn get(&self, h: usize, m: usize, r: usize) -> f64 {
        self.values[(h, m, r)]
    }

    pub fn values(&self) -> ArrayView3<'_, f64> {
        self.values.view()
    }

    /// `Σ_{h,r} μ[h][m][r]`; 1 for every dependent of a valid distribution.
    pub fn incoming_mass(&self, m: usize) -> f64 {
        let (rows, _, rels) = self.values.dim();
        (0..rows)
            .flat_map(|h| (0..rels).map(move |r| (h, r)))
            .map(|(h, r)| self.values[(h, m, r)])
            .sum()
    }
}
