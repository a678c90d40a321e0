//! Maximum-scoring labeled tree decoding.
//!
//! Relations are chosen first: for every head/dependent pair only the best
//! relation can appear in an optimal tree (swapping in a better relation on
//! the same link strictly improves the score). The reduced `(n+1) × (n+1)`
//! matrix is then decoded as an ordinary maximum spanning arborescence.
//!
//! Ties are broken toward the lower head index, then the lower relation id.

use std::collections::VecDeque;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::{DiscoursePair, LabeledTree, Mode, ScoreTensor};

/// Per-pair best relation: `best[(h, m)]` is `max_r θ[h][m][r]` over
/// permitted relations (`None` when the pair is fully masked), `argrel`
/// the smallest relation attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationReduction {
    pub best: Array2<Option<f64>>,
    pub argrel: Array2<usize>,
}

impl RelationReduction {
    pub fn n(&self) -> usize {
        self.best.nrows() - 1
    }
}

pub fn best_relation_reduce(theta: &ScoreTensor) -> RelationReduction {
    let n = theta.n();
    let mut best = Array2::from_elem((n + 1, n + 1), None);
    let mut argrel = Array2::zeros((n + 1, n + 1));
    for h in 0..=n {
        for m in 0..=n {
            for r in 0..theta.num_relations() {
                let Some(s) = theta.get(h, m, r) else {
                    continue;
                };
                if best[(h, m)].is_none_or(|b| s > b) {
                    best[(h, m)] = Some(s);
                    argrel[(h, m)] = r;
                }
            }
        }
    }
    RelationReduction { best, argrel }
}

/// Highest-scoring labeled tree. Chronological tensors take the greedy
/// per-dependent path, which is exact there because every head assignment
/// with `h < m` is acyclic; general tensors run Chu-Liu-Edmonds.
pub fn decode_tree(theta: &ScoreTensor) -> Result<LabeledTree> {
    match theta.mode() {
        Mode::Chronological => decode_greedy(theta),
        Mode::General => decode_cle(theta),
    }
}

/// Picks the best head for each dependent independently.
///
/// Only optimal when the result is acyclic; cyclic selections are reported
/// as an invalid tree.
pub fn decode_greedy(theta: &ScoreTensor) -> Result<LabeledTree> {
    let red = best_relation_reduce(theta);
    let parents = greedy_heads(&red.best)?;
    let tree = labeled(&red, &parents);
    tree.validate().map_err(Error::InvalidTree)?;
    Ok(tree)
}

/// Full Chu-Liu-Edmonds on the relation-reduced matrix.
pub fn decode_cle(theta: &ScoreTensor) -> Result<LabeledTree> {
    let red = best_relation_reduce(theta);
    let parents = chu_liu_edmonds(&red.best, 0)?;
    Ok(labeled(&red, &parents))
}

fn labeled(red: &RelationReduction, parents: &[usize]) -> LabeledTree {
    let edges = (1..parents.len())
        .map(|m| {
            let h = parents[m];
            DiscoursePair::new(h, m, red.argrel[(h, m)])
        })
        .collect();
    LabeledTree::new(parents.len() - 1, edges)
}

/// `parents[m]` for every `m >= 1`; `parents[0]` is unused (0).
pub fn greedy_heads(scores: &Array2<Option<f64>>) -> Result<Vec<usize>> {
    let size = scores.nrows();
    let mut parents = vec![0; size];
    for m in 1..size {
        let mut best: Option<(usize, f64)> = None;
        for h in 0..size {
            if h == m {
                continue;
            }
            if let Some(s) = scores[(h, m)] {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((h, s));
                }
            }
        }
        parents[m] = best.ok_or(Error::EmptySupport { node: m })?.0;
    }
    Ok(parents)
}

#[derive(Clone, Copy, Debug)]
struct Arc {
    from: usize,
    to: usize,
    weight: f64,
}

/// Maximum spanning arborescence rooted at `root` over a dense matrix where
/// `scores[(h, m)]` is the weight of `h → m` and `None` marks a missing arc.
///
/// Returns `parents[v]` for every vertex (`parents[root] = root`). Missing
/// arcs never enter candidate sets.
pub fn chu_liu_edmonds(scores: &Array2<Option<f64>>, root: usize) -> Result<Vec<usize>> {
    let size = scores.nrows();
    let mut arcs = Vec::new();
    for h in 0..size {
        for m in 0..size {
            if h == m || m == root {
                continue;
            }
            if let Some(w) = scores[(h, m)] {
                arcs.push(Arc {
                    from: h,
                    to: m,
                    weight: w,
                });
            }
        }
    }
    // Stable sort: for each dependent, candidates are scanned by ascending head.
    arcs.sort_by_key(|a| (a.to, a.from));
    check_reachable(size, root, &arcs)?;

    let chosen = contract(size, root, &arcs);
    let mut parents = vec![root; size];
    for i in chosen {
        parents[arcs[i].to] = arcs[i].from;
    }
    Ok(parents)
}

fn check_reachable(size: usize, root: usize, arcs: &[Arc]) -> Result<()> {
    let mut out = vec![Vec::new(); size];
    for a in arcs {
        out[a.from].push(a.to);
    }
    let mut seen = vec![false; size];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &w in &out[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(node) if arcs.iter().all(|a| a.to != node) => Err(Error::EmptySupport { node }),
        Some(node) => Err(Error::NoSpanningTree { node }),
        None => Ok(()),
    }
}

/// One round of Edmonds' algorithm. Returns indices into `arcs` of the
/// chosen arborescence. Every vertex must be reachable from `root`.
fn contract(size: usize, root: usize, arcs: &[Arc]) -> Vec<usize> {
    let mut best_in: Vec<Option<usize>> = vec![None; size];
    for (i, a) in arcs.iter().enumerate() {
        if a.to == root || a.from == a.to {
            continue;
        }
        match best_in[a.to] {
            Some(j) if arcs[j].weight >= a.weight => {}
            _ => best_in[a.to] = Some(i),
        }
    }

    let Some(cycle) = find_cycle(size, root, arcs, &best_in) else {
        return best_in.into_iter().flatten().collect();
    };

    let mut in_cycle = vec![false; size];
    for &v in &cycle {
        in_cycle[v] = true;
    }
    let mut new_id = vec![0; size];
    let mut next = 0;
    for v in 0..size {
        if !in_cycle[v] {
            new_id[v] = next;
            next += 1;
        }
    }
    let cycle_node = next;
    for &v in &cycle {
        new_id[v] = cycle_node;
    }

    let mut sub_arcs = Vec::new();
    let mut origin = Vec::new();
    for (i, a) in arcs.iter().enumerate() {
        let (from, to) = (new_id[a.from], new_id[a.to]);
        if from == to {
            continue;
        }
        let weight = if in_cycle[a.to] {
            a.weight - arcs[best_in[a.to].expect("cycle vertices have a best arc")].weight
        } else {
            a.weight
        };
        sub_arcs.push(Arc { from, to, weight });
        origin.push(i);
    }

    let sub = contract(next + 1, new_id[root], &sub_arcs);
    let mut chosen: Vec<usize> = sub.into_iter().map(|i| origin[i]).collect();
    let entering = chosen
        .iter()
        .copied()
        .find(|&i| in_cycle[arcs[i].to])
        .expect("a spanning arborescence enters the contracted cycle");
    let broken = arcs[entering].to;
    chosen.extend(
        cycle
            .iter()
            .filter(|&&v| v != broken)
            .map(|&v| best_in[v].expect("cycle vertices have a best arc")),
    );
    chosen
}

fn find_cycle(size: usize, root: usize, arcs: &[Arc], best_in: &[Option<usize>]) -> Option<Vec<usize>> {
    // 0 = unvisited, 1 = on the current walk, 2 = done
    let mut state = vec![0u8; size];
    state[root] = 2;
    for start in 0..size {
        let mut walk = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            walk.push(v);
            match best_in[v] {
                Some(i) => v = arcs[i].from,
                None => break,
            }
        }
        if state[v] == 1 && best_in[v].is_some() {
            let pos = walk.iter().position(|&u| u == v).expect("v is on the walk");
            return Some(walk[pos..].to_vec());
        }
        for u in walk {
            state[u] = 2;
        }
    }
    None
}

/// True iff every edge of `tree` carries the best relation for its link.
pub fn decode_optimality_check(theta: &ScoreTensor, tree: &LabeledTree) -> bool {
    tree.edges().iter().all(|e| {
        let Some(s) = theta.get(e.head, e.dependent, e.relation) else {
            return false;
        };
        (0..theta.num_relations())
            .filter_map(|r| theta.get(e.head, e.dependent, r))
            .all(|other| other <= s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_tree::tree_log_score;

    #[test]
    fn reduce_takes_the_max() {
        let theta = ScoreTensor::from_fn(1, 2, Mode::Chronological, |_, _, r| [0.1, 0.9][r]).unwrap();
        let red = best_relation_reduce(&theta);
        assert_eq!(red.best[(0, 1)], Some(0.9));
        assert_eq!(red.argrel[(0, 1)], 1);
        assert_eq!(red.best[(1, 0)], None);
    }

    #[test]
    fn reduce_breaks_ties_to_lowest_relation() {
        let theta = ScoreTensor::from_fn(1, 2, Mode::Chronological, |_, _, _| 0.5).unwrap();
        assert_eq!(best_relation_reduce(&theta).argrel[(0, 1)], 0);
    }

    #[test]
    fn all_ties_attach_to_the_root() {
        let tree = decode_tree(&ScoreTensor::zeros(2, 1, Mode::Chronological)).unwrap();
        assert_eq!(tree, LabeledTree::from_parents(&[(0, 0), (0, 0)]));
    }

    #[test]
    fn prefers_the_higher_scoring_tree() {
        let theta = ScoreTensor::from_fn(2, 1, Mode::Chronological, |h, m, _| match (h, m) {
            (0, 1) => 1.0,
            (0, 2) => 0.5,
            _ => 2.0,
        })
        .unwrap();
        let tree = decode_tree(&theta).unwrap();
        assert_eq!(tree, LabeledTree::from_parents(&[(0, 0), (1, 0)]));
        assert_eq!(tree_log_score(&theta, &tree).unwrap(), 3.0);
    }

    #[test]
    fn cle_breaks_a_two_cycle() {
        // 1 and 2 prefer each other; the root arc into 1 is cheaper to keep.
        let mut s = Array2::from_elem((3, 3), None);
        s[(0, 1)] = Some(5.0);
        s[(0, 2)] = Some(1.0);
        s[(1, 2)] = Some(10.0);
        s[(2, 1)] = Some(10.0);
        assert_eq!(chu_liu_edmonds(&s, 0).unwrap(), vec![0, 0, 1]);
    }

    #[test]
    fn cle_handles_nested_cycles() {
        // Classic example: the 1-2-3 cycle is contracted, then re-entered at 1.
        let mut s = Array2::from_elem((4, 4), None);
        for (h, m, w) in [
            (0, 1, 9.0),
            (0, 2, 10.0),
            (0, 3, 9.0),
            (1, 2, 20.0),
            (1, 3, 3.0),
            (2, 1, 30.0),
            (2, 3, 30.0),
            (3, 1, 11.0),
            (3, 2, 0.0),
        ] {
            s[(h, m)] = Some(w);
        }
        assert_eq!(chu_liu_edmonds(&s, 0).unwrap(), vec![0, 2, 0, 2]);
    }

    #[test]
    fn unreachable_nodes_are_reported() {
        let mut s = Array2::from_elem((3, 3), None);
        s[(0, 1)] = Some(1.0);
        s[(1, 2)] = Some(1.0);
        s[(2, 1)] = Some(1.0);
        assert!(chu_liu_edmonds(&s, 0).is_ok());
        s[(0, 1)] = None;
        assert!(matches!(chu_liu_edmonds(&s, 0), Err(Error::NoSpanningTree { .. })));
        s[(2, 1)] = None;
        assert!(matches!(chu_liu_edmonds(&s, 0), Err(Error::EmptySupport { node: 1 })));
    }

    #[test]
    fn optimality_check_detects_swapped_relations() {
        let theta =
            ScoreTensor::from_fn(2, 3, Mode::Chronological, |h, m, r| (h + 2 * m + 3 * r) as f64 * 0.1).unwrap();
        let tree = decode_tree(&theta).unwrap();
        assert!(decode_optimality_check(&theta, &tree));
        let worse: Vec<_> = tree
            .edges()
            .iter()
            .map(|e| DiscoursePair::new(e.head, e.dependent, 0))
            .collect();
        assert!(!decode_optimality_check(&theta, &LabeledTree::new(2, worse)));
    }
}
