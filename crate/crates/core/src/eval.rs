//! Attachment scores and diagnostic breakdowns.
//!
//! UAS is micro-averaged F1 over `(head, dependent)` links and LAS over
//! `(head, dependent, relation)` triples. Edges headed by the dummy root are
//! left out of both sides unless `include_root_edges` is set. Because the
//! exclusion is applied to each side separately, predicted and gold edge
//! counts can differ, so F1 is not in general the same as per-node
//! accuracy; it is when root edges are included.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{LabelSet, LabeledTree};

/// Inclusive utterance-count range; `max = None` is open-ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBucket {
    pub min: usize,
    pub max: Option<usize>,
}

impl LengthBucket {
    pub fn contains(&self, n: usize) -> bool {
        n >= self.min && self.max.is_none_or(|m| n <= m)
    }

    pub fn name(&self) -> String {
        match self.max {
            Some(max) => format!("{}-{}", self.min, max),
            None => format!("{}+", self.min),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub include_root_edges: bool,
    pub length_buckets: Vec<LengthBucket>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let b = |min, max| LengthBucket { min, max };
        EvalConfig {
            include_root_edges: false,
            length_buckets: vec![b(1, Some(5)), b(6, Some(10)), b(11, Some(15)), b(16, None)],
        }
    }
}

/// Raw tallies from which F1 scores are derived.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub gold: usize,
    pub predicted: usize,
    pub correct_links: usize,
    pub correct_labeled: usize,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.gold += o.gold;
        self.predicted += o.predicted;
        self.correct_links += o.correct_links;
        self.correct_labeled += o.correct_labeled;
    }

    fn f1(&self, correct: usize) -> f64 {
        let denom = self.gold + self.predicted;
        if denom == 0 {
            1.0
        } else {
            2.0 * correct as f64 / denom as f64
        }
    }

    pub fn uas(&self) -> f64 {
        self.f1(self.correct_links)
    }

    pub fn las(&self) -> f64 {
        self.f1(self.correct_labeled)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketScore {
    pub bucket: String,
    pub dialogues: usize,
    pub tally: Tally,
    pub uas: f64,
    pub las: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationCounts {
    pub relation: String,
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub uas: f64,
    pub las: f64,
    pub dialogues: usize,
    pub edges: usize,
    pub tally: Tally,
    pub include_root_edges: bool,
    pub by_length: Vec<BucketScore>,
    pub by_relation: Vec<RelationCounts>,
}

struct DialogueTally {
    n: usize,
    tally: Tally,
    // (correct, predicted, gold) per relation id
    relations: Vec<(usize, usize, usize)>,
}

fn tally_dialogue(pred: &LabeledTree, gold: &LabeledTree, labels: &LabelSet, include_root: bool) -> DialogueTally {
    let in_scope = |h: usize| include_root || h != 0;
    let mut tally = Tally::default();
    let mut relations = vec![(0, 0, 0); labels.num_labels()];
    let num_labels = relations.len();
    let scored = |r: usize| !labels.is_root(r) && r < num_labels;
    for m in 1..=gold.n() {
        let g = gold.edge_of(m).expect("validated gold tree");
        let p = pred.edge_of(m).expect("validated predicted tree");
        let g_in = in_scope(g.head);
        let p_in = in_scope(p.head);
        if g_in {
            tally.gold += 1;
            if scored(g.relation) {
                relations[g.relation].2 += 1;
            }
        }
        if p_in {
            tally.predicted += 1;
            if scored(p.relation) {
                relations[p.relation].1 += 1;
            }
        }
        if g_in && p_in && g.head == p.head {
            tally.correct_links += 1;
            if g.relation == p.relation {
                tally.correct_labeled += 1;
                if scored(g.relation) {
                    relations[g.relation].0 += 1;
                }
            }
        }
    }
    DialogueTally {
        n: gold.n(),
        tally,
        relations,
    }
}

/// Scores predictions against gold trees. Both maps must hold the same
/// dialogue ids with equal node counts, and every tree must be valid.
pub fn evaluate(
    predictions: &BTreeMap<String, LabeledTree>,
    gold: &BTreeMap<String, LabeledTree>,
    labels: &LabelSet,
    config: &EvalConfig,
) -> Result<EvalReport> {
    if let Some(id) = gold.keys().find(|id| !predictions.contains_key(*id)) {
        return Err(Error::Mismatch {
            id: id.clone(),
            message: "missing from predictions".into(),
        });
    }
    if let Some(id) = predictions.keys().find(|id| !gold.contains_key(*id)) {
        return Err(Error::Mismatch {
            id: id.clone(),
            message: "missing from gold".into(),
        });
    }
    for (id, g) in gold {
        let p = &predictions[id];
        if p.n() != g.n() {
            return Err(Error::Mismatch {
                id: id.clone(),
                message: format!("prediction has {} nodes, gold has {}", p.n(), g.n()),
            });
        }
        for t in [p, g] {
            t.validate().map_err(|v| Error::InvalidTree(v).in_dialogue(id))?;
        }
    }

    let per_dialogue: Vec<DialogueTally> = gold
        .par_iter()
        .map(|(id, g)| tally_dialogue(&predictions[id], g, labels, config.include_root_edges))
        .collect();

    let mut total = Tally::default();
    let mut buckets: Vec<(usize, Tally)> = vec![(0, Tally::default()); config.length_buckets.len()];
    let mut relations = vec![(0, 0, 0); labels.num_labels()];
    for d in &per_dialogue {
        total.add(&d.tally);
        if let Some(i) = config.length_buckets.iter().position(|b| b.contains(d.n)) {
            buckets[i].0 += 1;
            buckets[i].1.add(&d.tally);
        }
        for (acc, r) in relations.iter_mut().zip(&d.relations) {
            acc.0 += r.0;
            acc.1 += r.1;
            acc.2 += r.2;
        }
    }

    Ok(EvalReport {
        uas: total.uas(),
        las: total.las(),
        dialogues: gold.len(),
        edges: total.gold,
        tally: total,
        include_root_edges: config.include_root_edges,
        by_length: config
            .length_buckets
            .iter()
            .zip(buckets)
            .map(|(b, (dialogues, tally))| BucketScore {
                bucket: b.name(),
                dialogues,
                tally,
                uas: tally.uas(),
                las: tally.las(),
            })
            .collect(),
        by_relation: relations
            .into_iter()
            .enumerate()
            .filter(|(r, _)| !labels.is_root(*r))
            .map(|(r, (correct, predicted, gold))| RelationCounts {
                relation: labels.label(r).unwrap_or_default().to_owned(),
                correct,
                predicted,
                gold,
            })
            .collect(),
    })
}

impl EvalReport {
    /// Fixed-width table with scores in percent.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "dialogues {}  gold edges {}  predicted edges {}{}",
            self.dialogues,
            self.tally.gold,
            self.tally.predicted,
            if self.include_root_edges {
                "  (root edges included)"
            } else {
                ""
            }
        );
        let _ = writeln!(s, "UAS {:6.2}", self.uas * 100.0);
        let _ = writeln!(s, "LAS {:6.2}", self.las * 100.0);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<10} {:>9} {:>7} {:>7}", "length", "dialogues", "UAS", "LAS");
        for b in &self.by_length {
            let _ = writeln!(
                s,
                "{:<10} {:>9} {:>7.2} {:>7.2}",
                b.bucket,
                b.dialogues,
                b.uas * 100.0,
                b.las * 100.0
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<28} {:>7} {:>9} {:>6}",
            "relation", "correct", "predicted", "gold"
        );
        for r in &self.by_relation {
            let _ = writeln!(
                s,
                "{:<28} {:>7} {:>9} {:>6}",
                r.relation, r.correct, r.predicted, r.gold
            );
        }
        s
    }

    /// Grouped bar chart of UAS/LAS per length bucket.
    pub fn length_chart_svg(&self) -> String {
        let groups: Vec<(String, Vec<f64>)> = self
            .by_length
            .iter()
            .map(|b| (b.bucket.clone(), vec![b.uas * 100.0, b.las * 100.0]))
            .collect();
        bar_chart_svg(
            "Attachment scores by dialogue length",
            &["UAS", "LAS"],
            &groups,
            Some(100.0),
        )
    }

    /// Grouped bar chart of correct vs gold counts per relation.
    pub fn relation_chart_svg(&self) -> String {
        let groups: Vec<(String, Vec<f64>)> = self
            .by_relation
            .iter()
            .map(|r| (r.relation.clone(), vec![r.correct as f64, r.gold as f64]))
            .collect();
        bar_chart_svg("Correct relations vs. gold", &["correct", "gold"], &groups, None)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bar_chart_svg(title: &str, series: &[&str], groups: &[(String, Vec<f64>)], y_max: Option<f64>) -> String {
    const COLORS: [&str; 2] = ["#4c72b0", "#dd8452"];
    let bar = 14.0;
    let group_w = bar * series.len() as f64 + 16.0;
    let (left, top, plot_h, bottom) = (50.0, 40.0, 220.0, 90.0);
    let width = left + group_w * groups.len().max(1) as f64 + 20.0;
    let height = top + plot_h + bottom;
    let max = y_max.unwrap_or_else(|| groups.iter().flat_map(|(_, v)| v.iter().copied()).fold(1.0, f64::max));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        top + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{y}" x2="{}" y2="{y}" stroke="black"/>"#,
        width - 10.0,
        y = top + plot_h
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{max:.0}</text>"#,
        left - 4.0,
        top + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">0</text>"#,
        left - 4.0,
        top + plot_h
    );
    for (g, (name, values)) in groups.iter().enumerate() {
        let x0 = left + 8.0 + g as f64 * group_w;
        for (k, v) in values.iter().enumerate() {
            let h = if max > 0.0 { plot_h * v / max } else { 0.0 };
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{bar}" height="{:.1}" fill="{}"><title>{}: {v:.2}</title></rect>"#,
                x0 + k as f64 * bar,
                top + plot_h - h,
                h,
                COLORS[k % COLORS.len()],
                escape(series[k])
            );
        }
        let lx = x0 + bar * values.len() as f64 / 2.0;
        let ly = top + plot_h + 12.0;
        let _ = writeln!(
            s,
            r#"<text x="{lx:.1}" y="{ly:.1}" text-anchor="end" transform="rotate(-45 {lx:.1} {ly:.1})">{}</text>"#,
            escape(name)
        );
    }
    for (k, name) in series.iter().enumerate() {
        let x = width - 90.0;
        let y = 14.0 + k as f64 * 14.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            y - 9.0,
            COLORS[k % COLORS.len()],
            x + 14.0,
            y,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}
