//! Corpus and prediction file formats.
//!
//! # Canonical corpus (`.jsonl`)
//!
//! An optional header line followed by one dialogue per line:
//!
//! ```text
//! {"format":"discotree-corpus","version":1,"relations":["Comment","QAP"]}
//! {"id":"d1","edus":[{"speaker":"A","text":"hi"},{"text":"hello?"}],"relations":[{"x":0,"y":1,"type":"QAP"}]}
//! ```
//!
//! `x` and `y` index EDUs from 0 in file order. They are shifted to 1-based
//! utterance indices on load, with 0 reserved for the dummy root. The header
//! may also carry `"root_label"` to label root attachments with a corpus
//! relation instead of the reserved `<root>` label.
//!
//! # STAC / Molweni releases
//!
//! Both ship a JSON array of dialogues with the same per-dialogue shape as
//! the canonical records (`edus`, `relations` with `x`/`y`/`type`). Accepted
//! variants: `dialogue_id` for `id`, `relation` for `type`, missing
//! `speaker`. Line-delimited files are accepted for every format.
//!
//! Links with `x >= y` point backward in time and cannot be part of a
//! chronological tree; they are dropped on load and counted in the
//! [`IngestReport`].
//!
//! # Predictions (`.jsonl`)
//!
//! One record per dialogue with explicit root edges and relation names:
//!
//! ```text
//! {"id":"d1","n":2,"log_prob":-0.69,"edges":[{"head":0,"dependent":1,"relation":"<root>"},{"head":1,"dependent":2,"relation":"QAP"}]}
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{root_relation_policy, treeify, TreeifyReport};
use crate::types::{Dialogue, DiscoursePair, LabelSet, LabeledTree, RelationVocab, Utterance};

const CORPUS_FORMAT: &str = "discotree-corpus";
const CORPUS_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceFormat {
    Stac,
    Molweni,
    Canonical,
}

impl std::str::FromStr for SourceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stac" => Ok(SourceFormat::Stac),
            "molweni" => Ok(SourceFormat::Molweni),
            "canonical" => Ok(SourceFormat::Canonical),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawEdu {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawRelation {
    pub x: usize,
    pub y: usize,
    #[serde(rename = "type", alias = "relation")]
    pub label: String,
}

/// A dialogue record as it appears in corpus files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDialogue {
    #[serde(alias = "dialogue_id")]
    pub id: String,
    pub edus: Vec<RawEdu>,
    #[serde(default)]
    pub relations: Vec<RawRelation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct CorpusHeader {
    format: String,
    version: u32,
    relations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root_label: Option<String>,
}

/// Dialogues sharing one label set.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub labels: LabelSet,
    pub dialogues: Vec<Dialogue>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub dialogues: usize,
    pub edges: usize,
    /// Links with `x >= y`, dropped on load.
    pub backward_dropped: usize,
}

impl Corpus {
    pub fn edge_count(&self) -> usize {
        self.dialogues.iter().map(|d| d.gold_edges().len()).sum()
    }

    /// Gold trees for every dialogue plus the summed treeify report.
    pub fn treeified(&self) -> (Vec<(Dialogue, LabeledTree)>, TreeifyReport) {
        let root = root_relation_policy(&self.labels);
        let mut total = TreeifyReport::default();
        let pairs = self
            .dialogues
            .iter()
            .map(|d| {
                let (tree, report) = treeify(d, root);
                total += report;
                (d.clone(), tree)
            })
            .collect();
        (pairs, total)
    }

    pub fn to_raw(&self) -> Vec<RawDialogue> {
        self.dialogues
            .iter()
            .map(|d| RawDialogue {
                id: d.id().to_owned(),
                edus: d
                    .utterances()
                    .iter()
                    .map(|u| RawEdu {
                        speaker: u.speaker.clone(),
                        text: u.text.clone(),
                    })
                    .collect(),
                relations: d
                    .gold_edges()
                    .iter()
                    .filter(|e| e.head > 0)
                    .map(|e| RawRelation {
                        x: e.head - 1,
                        y: e.dependent - 1,
                        label: self.labels.label(e.relation).unwrap_or_default().to_owned(),
                    })
                    .collect(),
            })
            .collect()
    }

    /// Header line plus one record per dialogue.
    pub fn write_canonical(&self, mut out: impl Write) -> Result<()> {
        let header = CorpusHeader {
            format: CORPUS_FORMAT.into(),
            version: CORPUS_VERSION,
            relations: self.labels.vocab().labels().to_vec(),
            root_label: (!self.labels.has_reserved_root())
                .then(|| self.labels.label(self.labels.root_id()).unwrap_or_default().to_owned()),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for raw in self.to_raw() {
            serde_json::to_writer(&mut out, &raw)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Where a record came from, for error messages.
#[derive(Clone, Copy)]
enum Origin {
    Line(usize),
    Element(usize),
}

fn located(origin: Origin, id: &str, message: String) -> Error {
    match origin {
        Origin::Line(line) => Error::Parse {
            line,
            message: format!("dialogue {id}: {message}"),
        },
        Origin::Element(i) => Error::Mismatch {
            id: id.to_owned(),
            message: format!("{message} (array element {i})"),
        },
    }
}

/// Options for turning raw records into a [`Corpus`].
#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Closed vocabulary; labels outside it are an error. When absent the
    /// header's vocabulary is used, or else labels in first-appearance order.
    pub vocab: Option<RelationVocab>,
    /// Corpus label used for root attachments instead of the reserved one.
    pub root_label: Option<String>,
}

pub fn parse_corpus(text: &str, format: SourceFormat, options: &LoadOptions) -> Result<(Corpus, IngestReport)> {
    let trimmed = text.trim_start();
    let mut header = None;
    let mut records: Vec<(Origin, RawDialogue)> = Vec::new();
    if trimmed.starts_with('[') {
        let raw: Vec<RawDialogue> = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        records.extend(raw.into_iter().enumerate().map(|(i, r)| (Origin::Element(i), r)));
    } else {
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |e: serde_json::Error| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            };
            let value: serde_json::Value = serde_json::from_str(line).map_err(parse_err)?;
            if value.get("format").is_some() {
                if format != SourceFormat::Canonical {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "corpus header found; use the canonical format for this file".into(),
                    });
                }
                if !records.is_empty() || header.is_some() {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "corpus header must be the first record".into(),
                    });
                }
                let h: CorpusHeader = serde_json::from_value(value).map_err(parse_err)?;
                if h.format != CORPUS_FORMAT || h.version != CORPUS_VERSION {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("unsupported corpus header {} v{}", h.format, h.version),
                    });
                }
                header = Some(h);
                continue;
            }
            records.push((Origin::Line(i + 1), serde_json::from_value(value).map_err(parse_err)?));
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let vocab = match (&options.vocab, &header) {
        (Some(v), _) => v.clone(),
        (None, Some(h)) => RelationVocab::new(h.relations.clone())?,
        (None, None) => {
            let mut seen = Vec::new();
            let mut set = BTreeSet::new();
            for (_, r) in &records {
                for rel in &r.relations {
                    if set.insert(rel.label.clone()) {
                        seen.push(rel.label.clone());
                    }
                }
            }
            if seen.is_empty() {
                return Err(Error::Vocabulary(
                    "corpus has no relations and no vocabulary was given".into(),
                ));
            }
            RelationVocab::new(seen)?
        }
    };
    let unknown: BTreeSet<&str> = records
        .iter()
        .flat_map(|(_, r)| r.relations.iter())
        .map(|rel| rel.label.as_str())
        .filter(|l| vocab.id(l).is_none())
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownRelations(
            unknown.into_iter().map(str::to_owned).collect(),
        ));
    }
    let root_label = options
        .root_label
        .clone()
        .or_else(|| header.as_ref().and_then(|h| h.root_label.clone()));
    let labels = match root_label {
        Some(root) => LabelSet::with_root_label(vocab, &root)?,
        None => LabelSet::reserved(vocab),
    };

    let mut report = IngestReport::default();
    let mut dialogues = Vec::with_capacity(records.len());
    let mut ids = BTreeSet::new();
    for (origin, raw) in records {
        if !ids.insert(raw.id.clone()) {
            return Err(located(origin, &raw.id, "duplicate dialogue id".into()));
        }
        let n = raw.edus.len();
        if n == 0 {
            return Err(located(origin, &raw.id, "dialogue has no EDUs".into()));
        }
        let mut edges = Vec::with_capacity(raw.relations.len());
        for rel in &raw.relations {
            if rel.x >= n || rel.y >= n {
                return Err(located(
                    origin,
                    &raw.id,
                    format!("relation ({}, {}) refers past the {n} EDUs", rel.x, rel.y),
                ));
            }
            if rel.x >= rel.y {
                report.backward_dropped += 1;
                continue;
            }
            let r = labels.id(&rel.label).expect("labels checked above");
            edges.push(DiscoursePair::new(rel.x + 1, rel.y + 1, r));
        }
        let utterances = raw
            .edus
            .into_iter()
            .enumerate()
            .map(|(i, e)| Utterance {
                index: i + 1,
                speaker: e.speaker.filter(|s| !s.is_empty()),
                text: e.text,
            })
            .collect();
        report.edges += edges.len();
        dialogues.push(Dialogue::new(raw.id, utterances, edges)?);
    }
    report.dialogues = dialogues.len();
    Ok((Corpus { labels, dialogues }, report))
}

pub fn read_corpus(
    path: &std::path::Path,
    format: SourceFormat,
    options: &LoadOptions,
) -> Result<(Corpus, IngestReport)> {
    parse_corpus(&std::fs::read_to_string(path)?, format, options)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedEdge {
    pub head: usize,
    pub dependent: usize,
    pub relation: String,
}

/// A decoded tree with relation names, as written by `parse`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_prob: Option<f64>,
    pub edges: Vec<PredictedEdge>,
}

impl PredictionRecord {
    pub fn from_tree(id: &str, tree: &LabeledTree, labels: &LabelSet, log_prob: Option<f64>) -> Self {
        PredictionRecord {
            id: id.to_owned(),
            n: tree.n(),
            log_prob,
            edges: tree
                .edges()
                .iter()
                .map(|e| PredictedEdge {
                    head: e.head,
                    dependent: e.dependent,
                    relation: labels.label(e.relation).unwrap_or_default().to_owned(),
                })
                .collect(),
        }
    }

    pub fn to_tree(&self, labels: &LabelSet) -> Result<LabeledTree> {
        let mut unknown = BTreeSet::new();
        let edges = self
            .edges
            .iter()
            .filter_map(|e| match labels.id(&e.relation) {
                Some(r) => Some(DiscoursePair::new(e.head, e.dependent, r)),
                None => {
                    unknown.insert(e.relation.clone());
                    None
                }
            })
            .collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownRelations(unknown.into_iter().collect()).in_dialogue(&self.id));
        }
        let tree = LabeledTree::new(self.n, edges);
        tree.validate()
            .map_err(|v| Error::InvalidTree(v).in_dialogue(&self.id))?;
        Ok(tree)
    }
}

pub fn write_predictions<'a>(
    mut out: impl Write,
    records: impl IntoIterator<Item = &'a PredictionRecord>,
) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn parse_predictions(text: &str) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Trees keyed by dialogue id, with the label set that names their relations.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeBank {
    pub labels: LabelSet,
    pub trees: BTreeMap<String, LabeledTree>,
}

/// Loads trees from either a corpus file (treeified on load) or a
/// predictions file. Relation names are resolved against `labels` when
/// given, otherwise against the corpus's own vocabulary or, for prediction
/// files, the names in first-appearance order.
pub fn load_tree_bank(text: &str, labels: Option<&LabelSet>) -> Result<TreeBank> {
    let first = text.lines().find(|l| !l.trim().is_empty()).ok_or(Error::EmptyCorpus)?;
    let is_predictions = serde_json::from_str::<serde_json::Value>(first)
        .ok()
        .is_some_and(|v| v.get("edges").is_some());
    if is_predictions {
        let records = parse_predictions(text)?;
        let labels = match labels {
            Some(l) => l.clone(),
            None => labels_from_names(records.iter().flat_map(|r| r.edges.iter().map(|e| e.relation.as_str())))?,
        };
        let mut trees = BTreeMap::new();
        for r in &records {
            if trees.insert(r.id.clone(), r.to_tree(&labels)?).is_some() {
                return Err(Error::Mismatch {
                    id: r.id.clone(),
                    message: "duplicate dialogue id".into(),
                });
            }
        }
        Ok(TreeBank { labels, trees })
    } else {
        let options = LoadOptions {
            vocab: labels.map(|l| l.vocab().clone()),
            root_label: labels
                .filter(|l| !l.has_reserved_root())
                .and_then(|l| l.label(l.root_id()))
                .map(str::to_owned),
        };
        let (corpus, _) = parse_corpus(text, SourceFormat::Canonical, &options)?;
        let (pairs, _) = corpus.treeified();
        Ok(TreeBank {
            labels: corpus.labels,
            trees: pairs.into_iter().map(|(d, t)| (d.id().to_owned(), t)).collect(),
        })
    }
}

impl TreeBank {
    /// The same trees with relations renumbered by name into `target`.
    /// Root relations map to the target's root relation.
    pub fn relabel(&self, target: &LabelSet) -> Result<TreeBank> {
        let mut unknown = BTreeSet::new();
        let mut trees = BTreeMap::new();
        for (id, tree) in &self.trees {
            let edges = tree
                .edges()
                .iter()
                .map(|e| {
                    if self.labels.is_root(e.relation) {
                        return DiscoursePair::new(e.head, e.dependent, target.root_id());
                    }
                    let name = self.labels.label(e.relation).unwrap_or_default();
                    let r = target.id(name).unwrap_or_else(|| {
                        unknown.insert(name.to_owned());
                        0
                    });
                    DiscoursePair::new(e.head, e.dependent, r)
                })
                .collect();
            trees.insert(id.clone(), LabeledTree::new(tree.n(), edges));
        }
        if !unknown.is_empty() {
            return Err(Error::UnknownRelations(unknown.into_iter().collect()));
        }
        Ok(TreeBank {
            labels: target.clone(),
            trees,
        })
    }
}

/// Puts predictions and gold on one label set: the gold vocabulary followed
/// by any extra relation names the predictions use, with the gold root label.
pub fn align_tree_banks(predictions: &TreeBank, gold: &TreeBank) -> Result<(TreeBank, TreeBank)> {
    let root_name = gold.labels.label(gold.labels.root_id()).unwrap_or_default().to_owned();
    let mut names: Vec<String> = gold.labels.vocab().labels().to_vec();
    for name in predictions.labels.names() {
        let is_root = name == root_name || name == crate::types::RESERVED_ROOT_LABEL;
        if !is_root && !names.contains(&name) {
            names.push(name);
        }
    }
    let vocab = RelationVocab::new(names)?;
    let labels = if gold.labels.has_reserved_root() {
        LabelSet::reserved(vocab)
    } else {
        LabelSet::with_root_label(vocab, &root_name)?
    };
    let preds = predictions.relabel(&labels)?;
    Ok((preds, gold.relabel(&labels)?))
}

fn labels_from_names<'a>(names: impl Iterator<Item = &'a str>) -> Result<LabelSet> {
    let mut order = Vec::new();
    let mut seen = BTreeSet::new();
    for name in names {
        if name != crate::types::RESERVED_ROOT_LABEL && seen.insert(name) {
            order.push(name.to_owned());
        }
    }
    if order.is_empty() {
        order.push("unlabeled".to_owned());
    }
    Ok(LabelSet::reserved(RelationVocab::new(order)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MOLWENI_LIKE: &str = r#"[
      {"id": "m1", "edus": [{"speaker": "a", "text": "hi all"}, {"speaker": "b", "text": "hello?"}, {"text": "yes"}],
       "relations": [{"x": 0, "y": 1, "type": "Comment"}, {"x": 1, "y": 2, "type": "QAP"}]},
      {"dialogue_id": "m2", "edus": [{"text": "one"}, {"text": "two"}],
       "relations": [{"x": 0, "y": 1, "relation": "QAP"}, {"x": 1, "y": 0, "type": "QAP"}]}
    ]"#;

    #[test]
    fn reads_release_shaped_arrays() {
        let (corpus, report) = parse_corpus(MOLWENI_LIKE, SourceFormat::Molweni, &LoadOptions::default()).unwrap();
        assert_eq!(report.dialogues, 2);
        assert_eq!(report.edges, 3);
        assert_eq!(report.backward_dropped, 1);
        assert_eq!(corpus.labels.vocab().labels(), ["Comment", "QAP"]);
        assert_eq!(corpus.dialogues[0].gold_edges()[1], DiscoursePair::new(2, 3, 1));
        assert_eq!(corpus.dialogues[0].utterance(3).unwrap().speaker, None);
    }

    #[test]
    fn canonical_round_trip() {
        let (corpus, _) = parse_corpus(MOLWENI_LIKE, SourceFormat::Molweni, &LoadOptions::default()).unwrap();
        let mut buf = Vec::new();
        corpus.write_canonical(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (back, _) = parse_corpus(&text, SourceFormat::Canonical, &LoadOptions::default()).unwrap();
        assert_eq!(back, corpus);
    }

    #[test]
    fn unknown_labels_are_listed() {
        let vocab = RelationVocab::new(["Comment"]).unwrap();
        let err = parse_corpus(
            MOLWENI_LIKE,
            SourceFormat::Molweni,
            &LoadOptions {
                vocab: Some(vocab),
                root_label: None,
            },
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "unknown relation labels: QAP");
    }

    #[test]
    fn empty_input_has_no_dialogues() {
        for text in ["", "\n\n", "[]"] {
            let err = parse_corpus(text, SourceFormat::Stac, &LoadOptions::default()).unwrap_err();
            assert_eq!(err.to_string(), "no dialogues found");
        }
    }

    #[test]
    fn malformed_lines_report_their_number() {
        let text = "{\"id\":\"a\",\"edus\":[{\"text\":\"x\"}],\"relations\":[]}\n{\"id\":\n";
        match parse_corpus(text, SourceFormat::Canonical, &LoadOptions::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let text = "{\"id\":\"a\",\"edus\":[{\"text\":\"x\"}],\"relations\":[{\"x\":0,\"y\":4,\"type\":\"Q\"}]}\n";
        assert!(matches!(
            parse_corpus(text, SourceFormat::Canonical, &LoadOptions::default()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn predictions_round_trip_through_trees() {
        let labels = LabelSet::reserved(RelationVocab::new(["QAP"]).unwrap());
        let tree = LabeledTree::from_parents(&[(0, 1), (1, 0)]);
        let rec = PredictionRecord::from_tree("d", &tree, &labels, Some(-0.5));
        assert_eq!(rec.edges[0].relation, "<root>");
        assert_eq!(rec.to_tree(&labels).unwrap(), tree);
        let mut buf = Vec::new();
        write_predictions(&mut buf, [&rec]).unwrap();
        let bank = load_tree_bank(std::str::from_utf8(&buf).unwrap(), Some(&labels)).unwrap();
        assert_eq!(bank.trees["d"], tree);
    }
}
