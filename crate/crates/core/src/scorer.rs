//! Score tensors for dialogues.
//!
//! [`EdgeScorer`] is the seam between inference and whatever produces
//! log-potentials. Two scorers ship here: a featurized log-linear model
//! ([`LinearScorerModel`]) and precomputed tensors loaded from line-delimited
//! JSON records ([`ImportedScores`]).
//!
//! Label masking: edges from the dummy root may only carry the root
//! relation, and edges between utterances may carry any other relation.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::OnceLock;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dialogue, LabelSet, LabeledTree, Mode, RelationVocab, ScoreTensor};

/// Text of the dummy root utterance.
pub const DEFAULT_ROOT_TEXT: &str = "This is the start of a dialogue";

const STOPWORDS: &str = include_str!("../data/stopwords.txt");

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

/// Produces log-potentials for a dialogue over a fixed label set.
pub trait EdgeScorer: Sync {
    fn labels(&self) -> &LabelSet;

    fn score(&self, dialogue: &Dialogue) -> Result<ScoreTensor>;
}

/// Whether relation `r` may label an edge whose head is `h`.
pub fn label_allowed(labels: &LabelSet, head: usize, relation: usize) -> bool {
    (head == 0) == labels.is_root(relation)
}

/// Pair feature templates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    Bias,
    /// `m - h`, bucketed to 1..=5 where 5 means "5 or more".
    Distance(u8),
    SameSpeaker,
    /// Shared content tokens, bucketed to 0..=3 where 3 means "3 or more".
    Overlap(u8),
    DependentQuestion,
    HeadIsRoot,
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Bias => f.write_str("bias"),
            Feature::Distance(d) => write!(f, "distance={d}"),
            Feature::SameSpeaker => f.write_str("same_speaker"),
            Feature::Overlap(o) => write!(f, "overlap={o}"),
            Feature::DependentQuestion => f.write_str("dependent_question"),
            Feature::HeadIsRoot => f.write_str("head_is_root"),
        }
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bucket = |v: &str, max: u8| {
            v.parse::<u8>()
                .ok()
                .filter(|&b| b <= max)
                .ok_or_else(|| Error::Config(format!("bad feature bucket in {s:?}")))
        };
        match s.split_once('=') {
            None => match s {
                "bias" => Ok(Feature::Bias),
                "same_speaker" => Ok(Feature::SameSpeaker),
                "dependent_question" => Ok(Feature::DependentQuestion),
                "head_is_root" => Ok(Feature::HeadIsRoot),
                _ => Err(Error::Config(format!("unknown feature {s:?}"))),
            },
            Some(("distance", v)) => bucket(v, 5).and_then(|b| {
                if b == 0 {
                    Err(Error::Config(format!("bad feature bucket in {s:?}")))
                } else {
                    Ok(Feature::Distance(b))
                }
            }),
            Some(("overlap", v)) => bucket(v, 3).map(Feature::Overlap),
            _ => Err(Error::Config(format!("unknown feature {s:?}"))),
        }
    }
}

fn content_tokens(text: &str) -> HashSet<String> {
    let stop = stopwords();
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation()).to_lowercase())
        .filter(|t| !t.is_empty() && !stop.contains(t.as_str()))
        .collect()
}

/// Active feature templates for the pair `h → m` (`0 <= h < m <= n`).
///
/// Only utterance text and speakers are read, never gold edges.
pub fn pair_features(dialogue: &Dialogue, head: usize, dependent: usize, root_text: &str) -> Vec<Feature> {
    let dep = dialogue.utterance(dependent).expect("dependent must be an utterance");
    let head_utt = dialogue.utterance(head);
    let mut out = vec![Feature::Bias];
    out.push(Feature::Distance(dependent.saturating_sub(head).clamp(1, 5) as u8));
    if let (Some(hu), Some(s2)) = (head_utt, dep.speaker.as_deref()) {
        if hu.speaker.as_deref() == Some(s2) {
            out.push(Feature::SameSpeaker);
        }
    }
    let head_text = head_utt.map_or(root_text, |u| u.text.as_str());
    let shared = content_tokens(head_text)
        .intersection(&content_tokens(&dep.text))
        .count();
    out.push(Feature::Overlap(shared.min(3) as u8));
    if dep.text.trim_end().ends_with('?') {
        out.push(Feature::DependentQuestion);
    }
    if head == 0 {
        out.push(Feature::HeadIsRoot);
    }
    out
}

/// Sparse feature values keyed by feature id, sorted by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureVector(pub Vec<(usize, f64)>);

impl FeatureVector {
    pub fn dot(&self, dense: impl Fn(usize) -> f64) -> f64 {
        self.0.iter().map(|&(f, x)| x * dense(f)).sum()
    }
}

/// Frozen, enumerated feature space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSpace {
    features: Vec<Feature>,
    index: HashMap<Feature, usize>,
    root_text: String,
}

impl FeatureSpace {
    pub fn new(features: impl IntoIterator<Item = Feature>, root_text: impl Into<String>) -> Self {
        let features: Vec<Feature> = features.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index = features.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        FeatureSpace {
            features,
            index,
            root_text: root_text.into(),
        }
    }

    /// Every feature that fires on some chronological pair of the corpus.
    pub fn from_corpus<'a>(dialogues: impl IntoIterator<Item = &'a Dialogue>, root_text: &str) -> Self {
        let mut seen = BTreeSet::new();
        for d in dialogues {
            for m in 1..=d.len() {
                for h in 0..m {
                    seen.extend(pair_features(d, h, m, root_text));
                }
            }
        }
        Self::new(seen, root_text)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn id(&self, feature: Feature) -> Option<usize> {
        self.index.get(&feature).copied()
    }

    pub fn root_text(&self) -> &str {
        &self.root_text
    }

    /// Features outside the frozen space are dropped.
    pub fn featurize_pair(&self, dialogue: &Dialogue, head: usize, dependent: usize) -> FeatureVector {
        let mut ids: Vec<(usize, f64)> = pair_features(dialogue, head, dependent, &self.root_text)
            .into_iter()
            .filter_map(|f| self.id(f).map(|i| (i, 1.0)))
            .collect();
        ids.sort_by_key(|&(i, _)| i);
        FeatureVector(ids)
    }
}

/// Log-linear edge scorer: `θ[h][m][r] = Σ_f x_f(h, m) · w[f][r]`.
///
/// Weights are stored feature-major: `weights[f * num_labels + r]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearScorerModel {
    space: FeatureSpace,
    labels: LabelSet,
    weights: Vec<f64>,
}

impl LinearScorerModel {
    pub fn zeros(space: FeatureSpace, labels: LabelSet) -> Self {
        let weights = vec![0.0; space.len() * labels.num_labels()];
        LinearScorerModel { space, labels, weights }
    }

    pub fn with_weights(space: FeatureSpace, labels: LabelSet, weights: Vec<f64>) -> Result<Self> {
        let expected = space.len() * labels.num_labels();
        if weights.len() != expected {
            return Err(Error::Shape(format!(
                "weight vector has {} entries, expected {} features x {} labels = {expected}",
                weights.len(),
                space.len(),
                labels.num_labels()
            )));
        }
        Ok(LinearScorerModel { space, labels, weights })
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn weight_index(&self, feature: usize, relation: usize) -> usize {
        feature * self.labels.num_labels() + relation
    }

    /// Scores from precomputed pair features, indexed `[m][h]` for `h < m`.
    pub(crate) fn score_pairs(&self, n: usize, pairs: &PairFeatures) -> Result<ScoreTensor> {
        let labels = self.labels.num_labels();
        ScoreTensor::from_fn(n, labels, Mode::Chronological, |h, m, r| {
            pairs.get(h, m).dot(|f| self.weights[f * labels + r])
        })
        .map(|t| self.mask_labels(&t))
    }

    fn mask_labels(&self, theta: &ScoreTensor) -> ScoreTensor {
        let n = theta.n();
        let forbidden: Vec<_> = (0..n)
            .flat_map(|h| ((h + 1)..=n).map(move |m| (h, m)))
            .flat_map(|(h, m)| (0..self.labels.num_labels()).map(move |r| (h, m, r)))
            .filter(|&(h, _, r)| !label_allowed(&self.labels, h, r))
            .collect();
        theta.with_forbidden(&forbidden)
    }

    pub fn save(&self, out: impl Write) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            relations: self.labels.vocab().labels().to_vec(),
            root_label: (!self.labels.has_reserved_root())
                .then(|| self.labels.label(self.labels.root_id()).unwrap_or_default().to_owned()),
            root_text: self.space.root_text.clone(),
            features: self.space.features.iter().map(ToString::to_string).collect(),
            weights: self.weights.clone(),
        };
        serde_json::to_writer_pretty(out, &file)?;
        Ok(())
    }

    pub fn load(input: impl std::io::Read) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(input)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Config(format!(
                "unsupported model file {} v{} (expected {MODEL_FORMAT} v{MODEL_VERSION})",
                file.format, file.version
            )));
        }
        let vocab = RelationVocab::new(file.relations)?;
        let labels = match file.root_label {
            Some(root) => LabelSet::with_root_label(vocab, &root)?,
            None => LabelSet::reserved(vocab),
        };
        let features = file
            .features
            .iter()
            .map(|f| f.parse())
            .collect::<Result<Vec<Feature>>>()?;
        let space = FeatureSpace::new(features.iter().copied(), file.root_text);
        if space.features != features {
            return Err(Error::Config("model features must be unique and sorted".into()));
        }
        Self::with_weights(space, labels, file.weights)
    }
}

impl EdgeScorer for LinearScorerModel {
    fn labels(&self) -> &LabelSet {
        &self.labels
    }

    fn score(&self, dialogue: &Dialogue) -> Result<ScoreTensor> {
        score_dialogue(self, dialogue)
    }
}

const MODEL_FORMAT: &str = "discotree-linear-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    relations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root_label: Option<String>,
    root_text: String,
    features: Vec<String>,
    weights: Vec<f64>,
}

/// Pair feature vectors of one dialogue, computed once and reused across
/// training epochs.
#[derive(Clone, Debug)]
pub struct PairFeatures {
    n: usize,
    // row-major over (m, h) with h < m
    vectors: Vec<FeatureVector>,
}

impl PairFeatures {
    pub fn new(space: &FeatureSpace, dialogue: &Dialogue) -> Self {
        let n = dialogue.len();
        let vectors = (1..=n)
            .flat_map(|m| (0..m).map(move |h| (h, m)))
            .map(|(h, m)| space.featurize_pair(dialogue, h, m))
            .collect();
        PairFeatures { n, vectors }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, head: usize, dependent: usize) -> &FeatureVector {
        debug_assert!(head < dependent && dependent <= self.n);
        &self.vectors[dependent * (dependent - 1) / 2 + head]
    }
}

/// `θ` for a dialogue under the linear model, chronological and label-masked.
pub fn score_dialogue(model: &LinearScorerModel, dialogue: &Dialogue) -> Result<ScoreTensor> {
    let labels = model.labels.num_labels();
    if let Some(e) = dialogue.gold_edges().iter().find(|e| e.relation >= labels) {
        return Err(Error::Mismatch {
            id: dialogue.id().to_owned(),
            message: format!("gold edge {e} uses a relation outside the model's {labels} labels"),
        });
    }
    model.score_pairs(dialogue.len(), &PairFeatures::new(&model.space, dialogue))
}

/// Fails unless both label sets name the same labels in the same order.
pub fn ensure_same_labels(expected: &LabelSet, found: &LabelSet) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::VocabularyMismatch {
            expected: expected.names(),
            found: found.names(),
        })
    }
}

/// One externally computed score tensor, as stored in a `.jsonl` file.
///
/// `scores` and `mask` are dense, row-major over `(h, m, r)` with length
/// `(n+1)² · num_relations`. `mask[i] = 1` marks a permitted cell; masked
/// cells may hold any number or `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    pub n: usize,
    pub num_relations: usize,
    #[serde(default)]
    pub mode: Mode,
    /// Relation names for the last axis, when the producer knows them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub scores: Vec<Option<f64>>,
    pub mask: Vec<u8>,
}

impl ScoreRecord {
    pub fn from_tensor(id: impl Into<String>, theta: &ScoreTensor, labels: Option<&LabelSet>) -> Self {
        let values = theta.values();
        let mask = theta.mask();
        ScoreRecord {
            id: id.into(),
            n: theta.n(),
            num_relations: theta.num_relations(),
            mode: theta.mode(),
            labels: labels.map(LabelSet::names),
            scores: values
                .iter()
                .zip(mask.iter())
                .map(|(&v, &ok)| ok.then_some(v))
                .collect(),
            mask: mask.iter().map(|&ok| ok as u8).collect(),
        }
    }
}

/// Validates a record into a score tensor.
pub fn import_score_tensor(record: &ScoreRecord) -> Result<ScoreTensor> {
    let (n, rels) = (record.n, record.num_relations);
    let len = (n + 1) * (n + 1) * rels;
    if record.scores.len() != len || record.mask.len() != len {
        return Err(Error::Shape(format!(
            "record {}: expected {len} scores and mask bits for n={n}, R={rels}; got {} and {}",
            record.id,
            record.scores.len(),
            record.mask.len()
        )));
    }
    if let Some(names) = &record.labels {
        if names.len() != rels {
            return Err(Error::Shape(format!(
                "record {}: {} label names for {rels} relations",
                record.id,
                names.len()
            )));
        }
    }
    let mut values = Array3::zeros((n + 1, n + 1, rels));
    let mut permitted = Array3::from_elem((n + 1, n + 1, rels), false);
    for (i, ((v, p), (s, &bit))) in values
        .iter_mut()
        .zip(permitted.iter_mut())
        .zip(record.scores.iter().zip(&record.mask))
        .enumerate()
    {
        match bit {
            0 => {}
            1 => {
                *p = true;
                *v = s.unwrap_or(f64::NAN);
            }
            other => {
                return Err(Error::Shape(format!(
                    "record {}: mask entry {i} is {other}, expected 0 or 1",
                    record.id
                )))
            }
        }
    }
    ScoreTensor::from_parts(record.mode, values, permitted).map_err(|e| e.in_dialogue(&record.id))
}

pub fn read_score_records(input: impl BufRead) -> Result<Vec<ScoreRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_score_records<'a>(mut out: impl Write, records: impl IntoIterator<Item = &'a ScoreRecord>) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Precomputed tensors keyed by dialogue id.
#[derive(Clone, Debug)]
pub struct ImportedScores {
    labels: LabelSet,
    tensors: HashMap<String, ScoreTensor>,
}

impl ImportedScores {
    /// Records must match the label set: by name when they carry names,
    /// otherwise by relation count.
    pub fn new(labels: LabelSet, records: &[ScoreRecord]) -> Result<Self> {
        let names = labels.names();
        let mut tensors = HashMap::with_capacity(records.len());
        for rec in records {
            let consistent = match &rec.labels {
                Some(found) => *found == names,
                None => rec.num_relations == names.len(),
            };
            if !consistent {
                return Err(Error::VocabularyMismatch {
                    expected: names,
                    found: rec
                        .labels
                        .clone()
                        .unwrap_or_else(|| vec![format!("<{} unnamed>", rec.num_relations)]),
                }
                .in_dialogue(&rec.id));
            }
            tensors.insert(rec.id.clone(), import_score_tensor(rec)?);
        }
        Ok(ImportedScores { labels, tensors })
    }

    pub fn get(&self, id: &str) -> Option<&ScoreTensor> {
        self.tensors.get(id)
    }
}

impl EdgeScorer for ImportedScores {
    fn labels(&self) -> &LabelSet {
        &self.labels
    }

    fn score(&self, dialogue: &Dialogue) -> Result<ScoreTensor> {
        let theta = self.tensors.get(dialogue.id()).ok_or_else(|| Error::Mismatch {
            id: dialogue.id().to_owned(),
            message: "no imported score tensor for this dialogue".into(),
        })?;
        if theta.n() != dialogue.len() {
            return Err(Error::Mismatch {
                id: dialogue.id().to_owned(),
                message: format!(
                    "score tensor has n={} but the dialogue has {} utterances",
                    theta.n(),
                    dialogue.len()
                ),
            });
        }
        Ok(theta.clone())
    }
}

/// Scores each gold edge `margin` and everything else 0, so decoding
/// recovers the gold trees exactly. For pipeline checks.
#[derive(Clone, Debug)]
pub struct OracleScorer {
    labels: LabelSet,
    trees: HashMap<String, LabeledTree>,
    margin: f64,
}

impl OracleScorer {
    pub fn new(labels: LabelSet, trees: HashMap<String, LabeledTree>, margin: f64) -> Self {
        OracleScorer { labels, trees, margin }
    }
}

impl EdgeScorer for OracleScorer {
    fn labels(&self) -> &LabelSet {
        &self.labels
    }

    fn score(&self, dialogue: &Dialogue) -> Result<ScoreTensor> {
        let tree = self.trees.get(dialogue.id()).ok_or_else(|| Error::Mismatch {
            id: dialogue.id().to_owned(),
            message: "no reference tree".into(),
        })?;
        ScoreTensor::from_fn(
            dialogue.len(),
            self.labels.num_labels(),
            Mode::Chronological,
            |h, m, r| {
                let gold = tree.edge_of(m).is_some_and(|e| e.head == h && e.relation == r);
                if gold {
                    self.margin
                } else {
                    0.0
                }
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::best_relation_reduce;
    use crate::types::DiscoursePair;

    fn dialogue() -> Dialogue {
        Dialogue::from_texts(
            "d1",
            [
                (Some("ann"), "anyone have wheat for trade"),
                (Some("ann"), "I need wheat badly"),
                (Some("bob"), "how much wheat do you want?"),
                (None, "ok"),
                (Some("ann"), "two"),
                (Some("bob"), "deal"),
            ],
            vec![DiscoursePair::new(1, 3, 0)],
        )
        .unwrap()
    }

    fn labels() -> LabelSet {
        LabelSet::reserved(RelationVocab::new(["QAP", "Comment", "Ack"]).unwrap())
    }

    #[test]
    fn root_head_features() {
        let f = pair_features(&dialogue(), 0, 1, DEFAULT_ROOT_TEXT);
        assert!(f.contains(&Feature::HeadIsRoot));
        assert!(!f.contains(&Feature::SameSpeaker));
    }

    #[test]
    fn adjacent_same_speaker() {
        let f = pair_features(&dialogue(), 1, 2, DEFAULT_ROOT_TEXT);
        assert!(f.contains(&Feature::Distance(1)));
        assert!(f.contains(&Feature::SameSpeaker));
        assert!(f.contains(&Feature::Overlap(1)), "{f:?}");
    }

    #[test]
    fn question_and_distance_buckets() {
        let d = dialogue();
        let f = pair_features(&d, 1, 3, DEFAULT_ROOT_TEXT);
        assert!(f.contains(&Feature::DependentQuestion));
        assert!(f.contains(&Feature::Distance(2)));
        assert!(pair_features(&d, 0, 6, DEFAULT_ROOT_TEXT).contains(&Feature::Distance(5)));
        // missing speaker never matches
        assert!(!pair_features(&d, 3, 4, DEFAULT_ROOT_TEXT).contains(&Feature::SameSpeaker));
    }

    #[test]
    fn featurization_is_deterministic_and_ignores_gold() {
        let d = dialogue();
        let bare = d.with_edges(vec![]).unwrap();
        let space = FeatureSpace::from_corpus([&d], DEFAULT_ROOT_TEXT);
        for m in 1..=d.len() {
            for h in 0..m {
                let a = space.featurize_pair(&d, h, m);
                assert_eq!(a, space.featurize_pair(&d, h, m));
                assert_eq!(a, space.featurize_pair(&bare, h, m));
            }
        }
    }

    #[test]
    fn feature_names_round_trip() {
        for f in [
            Feature::Bias,
            Feature::Distance(3),
            Feature::SameSpeaker,
            Feature::Overlap(0),
            Feature::DependentQuestion,
            Feature::HeadIsRoot,
        ] {
            assert_eq!(f.to_string().parse::<Feature>().unwrap(), f);
        }
        assert!("distance=0".parse::<Feature>().is_err());
        assert!("overlap=4".parse::<Feature>().is_err());
        assert!("colour".parse::<Feature>().is_err());
    }

    #[test]
    fn zero_weights_score_zero_and_mask_labels() {
        let d = dialogue();
        let model = LinearScorerModel::zeros(FeatureSpace::from_corpus([&d], DEFAULT_ROOT_TEXT), labels());
        let theta = score_dialogue(&model, &d).unwrap();
        let root = labels().root_id();
        for m in 1..=d.len() {
            for h in 0..m {
                for r in 0..4 {
                    let allowed = (h == 0) == (r == root);
                    assert_eq!(theta.get(h, m, r), allowed.then_some(0.0), "({h},{m},{r})");
                }
            }
        }
    }

    #[test]
    fn bias_weight_selects_relation() {
        let d = dialogue();
        let space = FeatureSpace::from_corpus([&d], DEFAULT_ROOT_TEXT);
        let mut model = LinearScorerModel::zeros(space.clone(), labels());
        let idx = model.weight_index(space.id(Feature::Bias).unwrap(), 2);
        model.weights_mut()[idx] = 1.0;
        let red = best_relation_reduce(&score_dialogue(&model, &d).unwrap());
        for m in 2..=d.len() {
            for h in 1..m {
                assert_eq!(red.argrel[(h, m)], 2);
            }
        }
    }

    #[test]
    fn out_of_range_gold_relation_is_rejected() {
        let d = Dialogue::from_texts(
            "x",
            [(None::<&str>, "a"), (None, "b")],
            vec![DiscoursePair::new(1, 2, 7)],
        )
        .unwrap();
        let model = LinearScorerModel::zeros(FeatureSpace::from_corpus([&d], DEFAULT_ROOT_TEXT), labels());
        assert!(score_dialogue(&model, &d).is_err());
    }

    #[test]
    fn model_file_round_trips_bit_exactly() {
        let d = dialogue();
        let space = FeatureSpace::from_corpus([&d], DEFAULT_ROOT_TEXT);
        let weights = (0..space.len() * 4).map(|i| (i as f64 * 0.7311).sin() / 3.0).collect();
        let model = LinearScorerModel::with_weights(space, labels(), weights).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let back = LinearScorerModel::load(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        let bits = |m: &LinearScorerModel| m.weights().iter().map(|w| w.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&model));
    }

    #[test]
    fn import_accepts_well_formed_records() {
        let theta = ScoreTensor::from_fn(3, 17, Mode::Chronological, |h, m, r| (h * 100 + m * 10 + r) as f64).unwrap();
        let rec = ScoreRecord::from_tensor("x", &theta, None);
        assert_eq!(import_score_tensor(&rec).unwrap(), theta);
    }

    #[test]
    fn import_rejects_nan_and_mask_violations() {
        let theta = ScoreTensor::zeros(3, 2, Mode::Chronological);
        let mut rec = ScoreRecord::from_tensor("x", &theta, None);
        let cell = |h: usize, m: usize, r: usize| (h * 4 + m) * 2 + r;
        rec.scores[cell(0, 1, 0)] = None;
        let err = import_score_tensor(&rec).unwrap_err();
        assert!(err.to_string().contains("non-finite score"), "{err}");

        let mut rec = ScoreRecord::from_tensor("x", &theta, None);
        rec.mask[cell(2, 1, 0)] = 1;
        rec.scores[cell(2, 1, 0)] = Some(0.0);
        assert!(import_score_tensor(&rec).is_err());

        let mut rec = ScoreRecord::from_tensor("x", &theta, None);
        rec.scores.pop();
        assert!(matches!(import_score_tensor(&rec), Err(Error::Shape(_))));
    }

    #[test]
    fn imported_scores_check_label_names() {
        let theta = ScoreTensor::zeros(2, 4, Mode::Chronological);
        let good = ScoreRecord::from_tensor("a", &theta, Some(&labels()));
        assert!(ImportedScores::new(labels(), std::slice::from_ref(&good)).is_ok());
        let mut bad = good;
        bad.labels.as_mut().unwrap()[0] = "Other".into();
        assert!(matches!(
            ImportedScores::new(labels(), &[bad]),
            Err(Error::InDialogue { .. })
        ));
    }
}
