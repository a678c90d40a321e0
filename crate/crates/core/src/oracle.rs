//! Exhaustive enumeration of labeled trees for small score tensors.
//!
//! Every head assignment over the permitted cells is tried, cyclic ones are
//! skipped, and each relation choice is enumerated explicitly. Cost grows as
//! `(n·R)^n`, so this is only meant for `n <= 5` or so.

use ndarray::Array3;

use crate::types::{DiscoursePair, LabeledTree, ScoreTensor};

fn acyclic(heads: &[usize]) -> bool {
    let n = heads.len() - 1;
    (1..=n).all(|start| {
        let mut v = start;
        for _ in 0..=n {
            if v == 0 {
                return true;
            }
            v = heads[v];
        }
        false
    })
}

/// Calls `visit` with every labeled tree permitted by `theta` and its score.
pub fn for_each_tree(theta: &ScoreTensor, mut visit: impl FnMut(&[(usize, usize)], f64)) {
    let n = theta.n();
    let cands: Vec<Vec<(usize, usize, f64)>> = (0..=n)
        .map(|m| {
            if m == 0 {
                Vec::new()
            } else {
                theta.incoming(m).collect()
            }
        })
        .collect();
    if (1..=n).any(|m| cands[m].is_empty()) {
        return;
    }
    let mut choice = vec![0usize; n + 1];
    let mut parents = vec![(0usize, 0usize); n + 1];
    let mut heads = vec![0usize; n + 1];
    loop {
        let mut score = 0.0;
        for m in 1..=n {
            let (h, r, s) = cands[m][choice[m]];
            heads[m] = h;
            parents[m] = (h, r);
            score += s;
        }
        if acyclic(&heads) {
            visit(&parents[1..], score);
        }
        // odometer increment over nodes 1..=n
        let mut m = 1;
        loop {
            if m > n {
                return;
            }
            choice[m] += 1;
            if choice[m] < cands[m].len() {
                break;
            }
            choice[m] = 0;
            m += 1;
        }
    }
}

/// Number of permitted labeled trees.
pub fn count_trees(theta: &ScoreTensor) -> usize {
    let mut count = 0;
    for_each_tree(theta, |_, _| count += 1);
    count
}

/// `log Σ_T exp(score(T))`, or `None` when no tree exists.
pub fn log_partition(theta: &ScoreTensor) -> Option<f64> {
    let mut scores = Vec::new();
    for_each_tree(theta, |_, s| scores.push(s));
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (!scores.is_empty()).then(|| max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln())
}

/// Highest tree score and the first tree attaining it in enumeration order.
pub fn best_tree(theta: &ScoreTensor) -> Option<(f64, LabeledTree)> {
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    for_each_tree(theta, |parents, s| {
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, parents.to_vec()));
        }
    });
    best.map(|(s, p)| (s, LabeledTree::from_parents(&p)))
}

/// Edge-relation probabilities by direct summation.
pub fn marginals(theta: &ScoreTensor) -> Option<Array3<f64>> {
    let log_z = log_partition(theta)?;
    let n = theta.n();
    let mut mu = Array3::zeros((n + 1, n + 1, theta.num_relations()));
    for_each_tree(theta, |parents, s| {
        let p = (s - log_z).exp();
        for (i, &(h, r)) in parents.iter().enumerate() {
            mu[[h, i + 1, r]] += p;
        }
    });
    Some(mu)
}

/// Score of a tree given as edges, summing permitted cells only.
pub fn tree_score(theta: &ScoreTensor, edges: &[DiscoursePair]) -> Option<f64> {
    edges.iter().map(|e| theta.get(e.head, e.dependent, e.relation)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Mode;

    #[test]
    fn counts_match_closed_forms() {
        for n in 1..=4 {
            let chrono = ScoreTensor::zeros(n, 2, Mode::Chronological);
            let fact: usize = (1..=n).product();
            assert_eq!(count_trees(&chrono), fact * 2usize.pow(n as u32));
            let general = ScoreTensor::zeros(n, 1, Mode::General);
            assert_eq!(count_trees(&general), (n + 1).pow(n as u32 - 1));
        }
    }

    #[test]
    fn marginals_sum_to_one_per_node() {
        let theta = ScoreTensor::from_fn(3, 2, Mode::General, |h, m, r| (h + 2 * m + r) as f64 * 0.3).unwrap();
        let mu = marginals(&theta).unwrap();
        for m in 1..=3 {
            let mass: f64 = (0..=3)
                .flat_map(|h| (0..2).map(move |r| (h, r)))
                .map(|(h, r)| mu[[h, m, r]])
                .sum();
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }
}
