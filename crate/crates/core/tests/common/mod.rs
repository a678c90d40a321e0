//! Test-side reference implementations, written independently of the
//! library's own enumeration code.

#![allow(dead_code)]

use std::path::PathBuf;

use discotree::ScoreTensor;
use ndarray::Array3;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

/// Every labeled multi-root tree of `theta`, as `(parent, relation)` per
/// dependent (index 0 unused) with its total score.
pub fn all_trees(theta: &ScoreTensor) -> Vec<(Vec<(usize, usize)>, f64)> {
    let n = theta.n();
    let options: Vec<Vec<(usize, usize, f64)>> = (0..=n)
        .map(|m| {
            if m == 0 {
                return Vec::new();
            }
            let mut v = Vec::new();
            for h in 0..=n {
                for r in 0..theta.num_relations() {
                    if let Some(s) = theta.get(h, m, r) {
                        v.push((h, r, s));
                    }
                }
            }
            v
        })
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![(0, 0); n + 1];
    extend(1, 0.0, n, &options, &mut choice, &mut out);
    out
}

fn extend(
    m: usize,
    score: f64,
    n: usize,
    options: &[Vec<(usize, usize, f64)>],
    choice: &mut Vec<(usize, usize)>,
    out: &mut Vec<(Vec<(usize, usize)>, f64)>,
) {
    if m > n {
        if reaches_root(choice) {
            out.push((choice.clone(), score));
        }
        return;
    }
    for &(h, r, s) in &options[m] {
        choice[m] = (h, r);
        extend(m + 1, score + s, n, options, choice, out);
    }
}

/// Walks parent pointers from every node; a tree reaches 0 within n steps.
fn reaches_root(parents: &[(usize, usize)]) -> bool {
    let n = parents.len() - 1;
    (1..=n).all(|start| {
        let mut v = start;
        for _ in 0..=n {
            if v == 0 {
                return true;
            }
            v = parents[v].0;
        }
        v == 0
    })
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

pub struct Brute {
    pub count: usize,
    pub log_z: f64,
    pub marginals: Array3<f64>,
    pub best: f64,
}

pub fn brute_force(theta: &ScoreTensor) -> Brute {
    let trees = all_trees(theta);
    let log_z = log_sum_exp(trees.iter().map(|t| t.1));
    let n = theta.n();
    let mut marginals = Array3::zeros((n + 1, n + 1, theta.num_relations()));
    for (parents, score) in &trees {
        let p = (score - log_z).exp();
        for (m, &(h, r)) in parents.iter().enumerate().skip(1) {
            marginals[(h, m, r)] += p;
        }
    }
    let best = trees.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    Brute {
        count: trees.len(),
        log_z,
        marginals,
        best,
    }
}

/// Sum of `theta` over a tree's edges, computed from the raw cells.
pub fn score_of(theta: &ScoreTensor, tree: &discotree::LabeledTree) -> f64 {
    tree.edges()
        .iter()
        .map(|e| theta.get(e.head, e.dependent, e.relation).expect("edge is permitted"))
        .sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}
