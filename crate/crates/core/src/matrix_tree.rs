//! Exact inference over labeled multi-root spanning-tree distributions.
//!
//! A tree `T` scores `s(T) = Π exp θ[h][m][r]` over its edges. The partition
//! function `Z = Σ_T s(T)` is the determinant of the Laplacian minor built
//! from relation-marginalized potentials `A[h][m] = Σ_r exp θ[h][m][r]`:
//!
//! ```text
//! L[m][m] = Σ_{h=0..n} A[h][m]        (in-degree, root edges included)
//! L[h][m] = -A[h][m]                  (h != m)
//! Z       = det(L with row 0 and column 0 removed)
//! ```
//!
//! Including root edges in the degree term and deleting the root row and
//! column yields the sum over all multi-root trees, where any number of
//! nodes may attach to the root directly.
//!
//! The same code path serves chronological tensors (only `h < m` permitted)
//! and general directed tensors. In chronological mode the minor is upper
//! triangular, so `log Z` factorizes into a per-dependent log-sum-exp; see
//! [`chronological_log_partition`].

use std::cell::Cell;

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::linalg::{LogDet, Lu};
use crate::types::{LabeledTree, MarginalTensor, ScoreTensor};

pub use crate::linalg::padded_batch_log_det;

thread_local! {
    static LAPLACIAN_SIGN_FAULT: Cell<bool> = const { Cell::new(false) };
}

/// Mutation hook for the verification suite: while set, the current thread
/// builds Laplacians with the sign of every off-diagonal entry flipped.
#[doc(hidden)]
pub fn inject_laplacian_sign_fault(enabled: bool) {
    LAPLACIAN_SIGN_FAULT.with(|f| f.set(enabled));
}

/// Exponentiated, max-shifted potentials.
#[derive(Clone, Debug)]
pub struct Potentials {
    /// `exp(θ[h][m][r] - shift)` on permitted cells, 0 elsewhere.
    pub edge: Array3<f64>,
    /// `Σ_r edge[h][m][r]`.
    pub pair: Array2<f64>,
    /// Global maximum of the permitted scores.
    pub shift: f64,
}

impl Potentials {
    pub fn n(&self) -> usize {
        self.pair.nrows() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogZResult {
    pub log_z: f64,
    /// Shift subtracted from every score before exponentiation;
    /// `log_z` already includes the `n · shift` correction.
    pub stabilization_shift: f64,
}

pub fn potentials(theta: &ScoreTensor) -> Result<Potentials> {
    let n = theta.n();
    for m in 1..=n {
        if theta.incoming(m).next().is_none() {
            return Err(Error::EmptySupport { node: m });
        }
    }
    let shift = theta.max_permitted().unwrap_or(0.0);
    let rels = theta.num_relations();
    let mut edge = Array3::zeros((n + 1, n + 1, rels));
    let mut pair = Array2::zeros((n + 1, n + 1));
    for m in 1..=n {
        for (h, r, score) in theta.incoming(m) {
            let a = (score - shift).exp();
            edge[(h, m, r)] = a;
            pair[(h, m)] += a;
        }
    }
    Ok(Potentials { edge, pair, shift })
}

/// The full `(n+1) × (n+1)` Laplacian, including the root row and column.
pub fn laplacian(pot: &Potentials) -> Array2<f64> {
    let n = pot.n();
    let flip = LAPLACIAN_SIGN_FAULT.with(Cell::get);
    let off = if flip { 1.0 } else { -1.0 };
    let mut lap = Array2::zeros((n + 1, n + 1));
    for m in 0..=n {
        let mut degree = 0.0;
        for h in 0..=n {
            let a = pot.pair[(h, m)];
            if h != m {
                lap[(h, m)] = off * a;
                degree += a;
            }
        }
        lap[(m, m)] = degree;
    }
    lap
}

/// The Laplacian with the root row and column removed.
pub fn laplacian_minor(pot: &Potentials) -> Array2<f64> {
    let lap = laplacian(pot);
    lap.slice(ndarray::s![1.., 1..]).to_owned()
}

fn factor_minor(minor: &Array2<f64>) -> Result<(Lu, LogDet)> {
    let lu = Lu::factor(minor.view())?;
    let det = lu.log_det();
    if det.sign <= 0.0 || !det.log_abs.is_finite() {
        return Err(Error::NonPositiveDeterminant {
            condition: lu.condition_estimate(),
        });
    }
    Ok((lu, det))
}

/// `log Z(θ)` via a log-domain determinant of the Laplacian minor.
pub fn log_partition(theta: &ScoreTensor) -> Result<LogZResult> {
    let pot = potentials(theta)?;
    let (_, det) = factor_minor(&laplacian_minor(&pot))?;
    Ok(LogZResult {
        log_z: det.log_abs + theta.n() as f64 * pot.shift,
        stabilization_shift: pot.shift,
    })
}

/// Closed form of `log Z` for chronological tensors:
/// `Σ_m log Σ_{h<m, r} exp θ[h][m][r]`.
///
/// The tree distribution factorizes per dependent because any head
/// assignment with `h < m` is acyclic.
pub fn chronological_log_partition(theta: &ScoreTensor) -> Result<f64> {
    if theta.mode() != crate::types::Mode::Chronological {
        return Err(Error::Config(
            "closed-form partition requires a chronological tensor".into(),
        ));
    }
    let mut total = 0.0;
    for m in 1..=theta.n() {
        let scores: Vec<f64> = theta.incoming(m).map(|(_, _, s)| s).collect();
        let max = scores
            .iter()
            .copied()
            .reduce(f64::max)
            .ok_or(Error::EmptySupport { node: m })?;
        total += max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    }
    Ok(total)
}

/// `Σ θ[h][m][r]` over the edges of `tree`, i.e. `log s(T)`.
pub fn tree_log_score(theta: &ScoreTensor, tree: &LabeledTree) -> Result<f64> {
    tree.validate().map_err(Error::InvalidTree)?;
    if tree.n() != theta.n() {
        return Err(Error::Shape(format!(
            "tree has {} nodes but the score tensor has {}",
            tree.n(),
            theta.n()
        )));
    }
    tree.edges().iter().try_fold(0.0, |acc, e| {
        theta
            .get(e.head, e.dependent, e.relation)
            .map(|s| acc + s)
            .ok_or(Error::ForbiddenEdge {
                head: e.head,
                dependent: e.dependent,
                relation: e.relation,
            })
    })
}

/// `log P(T) = log s(T) - log Z`.
pub fn tree_log_prob(theta: &ScoreTensor, tree: &LabeledTree) -> Result<f64> {
    let score = tree_log_score(theta, tree)?;
    let log_z = log_partition(theta)?.log_z;
    Ok((score - log_z).min(0.0))
}

/// Edge-relation marginals `μ = ∂ log Z / ∂θ`.
pub fn marginals(theta: &ScoreTensor) -> Result<MarginalTensor> {
    inference(theta).map(|(_, mu)| mu)
}

/// `log Z` and the marginals from a single factorization.
///
/// With `M = L̂⁻¹` indexed by node (1-based):
///
/// ```text
/// μ[0][m][r] = A[0][m][r] · M[m][m]
/// μ[h][m][r] = A[h][m][r] · (M[m][m] - M[m][h])    (h >= 1)
/// ```
///
/// The shift cancels because `A` and `M` scale inversely.
pub fn inference(theta: &ScoreTensor) -> Result<(LogZResult, MarginalTensor)> {
    let pot = potentials(theta)?;
    let n = pot.n();
    let (lu, det) = factor_minor(&laplacian_minor(&pot))?;
    let inv = lu.inverse();
    let mut mu = Array3::zeros(pot.edge.dim());
    for ((h, m, r), a) in pot.edge.indexed_iter() {
        if *a == 0.0 {
            continue;
        }
        let diag = inv[(m - 1, m - 1)];
        let weight = if h == 0 { diag } else { diag - inv[(m - 1, h - 1)] };
        mu[(h, m, r)] = a * weight;
    }
    let log_z = LogZResult {
        log_z: det.log_abs + n as f64 * pot.shift,
        stabilization_shift: pot.shift,
    };
    Ok((log_z, MarginalTensor::new(mu)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Mode;
    use approx::assert_relative_eq;
    use ndarray::Array3;

    fn chain() -> LabeledTree {
        LabeledTree::from_parents(&[(0, 0), (1, 0)])
    }

    #[test]
    fn zero_scores_give_unit_potentials() {
        let pot = potentials(&ScoreTensor::zeros(2, 1, Mode::Chronological)).unwrap();
        assert_eq!(pot.shift, 0.0);
        for h in 0..3 {
            for m in 0..3 {
                let expect = if h < m && m >= 1 { 1.0 } else { 0.0 };
                assert_eq!(pot.pair[(h, m)], expect, "A[{h}][{m}]");
            }
        }
    }

    #[test]
    fn shift_is_the_maximum_permitted_score() {
        let theta = ScoreTensor::from_fn(1, 1, Mode::Chronological, |_, _, _| 2f64.ln()).unwrap();
        let pot = potentials(&theta).unwrap();
        assert_relative_eq!(pot.shift, 2f64.ln());
        assert_relative_eq!(pot.edge[(0, 1, 0)], 1.0);
    }

    #[test]
    fn empty_support_is_rejected() {
        let theta = ScoreTensor::zeros(1, 1, Mode::Chronological).with_forbidden(&[(0, 1, 0)]);
        let err = potentials(&theta).unwrap_err();
        assert_eq!(err.to_string(), "no permitted head for node 1");
        assert!(log_partition(&theta).is_err());
    }

    #[test]
    fn tree_scores_sum_edge_scores() {
        let theta = ScoreTensor::from_fn(2, 1, Mode::Chronological, |h, m, _| match (h, m) {
            (0, 1) => 1.5,
            (1, 2) => -0.5,
            _ => 0.0,
        })
        .unwrap();
        assert_relative_eq!(tree_log_score(&theta, &chain()).unwrap(), 1.0);
        let zero = ScoreTensor::zeros(2, 1, Mode::Chronological);
        assert_eq!(tree_log_score(&zero, &chain()).unwrap(), 0.0);
    }

    #[test]
    fn forbidden_tree_edge_is_an_error() {
        let theta = ScoreTensor::zeros(2, 1, Mode::Chronological).with_forbidden(&[(1, 2, 0)]);
        assert!(matches!(
            tree_log_score(&theta, &chain()),
            Err(Error::ForbiddenEdge {
                head: 1,
                dependent: 2,
                relation: 0
            })
        ));
    }

    #[test]
    fn uniform_counts() {
        // 3! chronological trees; 2! · 2² labeled trees; 3 arborescences of K3 rooted at 0.
        let z = |n, r, mode| log_partition(&ScoreTensor::zeros(n, r, mode)).unwrap().log_z;
        assert_relative_eq!(z(3, 1, Mode::Chronological), 6f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(z(2, 2, Mode::Chronological), 8f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(z(2, 1, Mode::General), 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn single_node_has_probability_one() {
        let theta = ScoreTensor::from_fn(1, 1, Mode::Chronological, |_, _, _| 3.7).unwrap();
        let tree = LabeledTree::from_parents(&[(0, 0)]);
        assert_eq!(tree_log_prob(&theta, &tree).unwrap(), 0.0);
    }

    #[test]
    fn uniform_log_prob() {
        let theta = ScoreTensor::zeros(3, 1, Mode::Chronological);
        let tree = LabeledTree::from_parents(&[(0, 0), (0, 0), (2, 0)]);
        assert_relative_eq!(tree_log_prob(&theta, &tree).unwrap(), -(6f64.ln()), epsilon = 1e-12);
    }

    #[test]
    fn uniform_marginals() {
        let mu = marginals(&ScoreTensor::zeros(2, 1, Mode::Chronological)).unwrap();
        assert_relative_eq!(mu.get(0, 1, 0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(mu.get(0, 2, 0), 0.5, epsilon = 1e-12);
        assert_relative_eq!(mu.get(1, 2, 0), 0.5, epsilon = 1e-12);

        let mu = marginals(&ScoreTensor::zeros(2, 2, Mode::Chronological)).unwrap();
        for r in 0..2 {
            assert_relative_eq!(mu.get(0, 1, r), 0.5, epsilon = 1e-12);
            assert_relative_eq!(mu.get(0, 2, r), 0.25, epsilon = 1e-12);
            assert_relative_eq!(mu.get(1, 2, r), 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn closed_form_needs_chronological_mode() {
        assert!(chronological_log_partition(&ScoreTensor::zeros(2, 1, Mode::General)).is_err());
    }

    #[test]
    fn large_scores_do_not_overflow() {
        let theta = ScoreTensor::from_fn(4, 2, Mode::Chronological, |h, m, r| 900.0 + (h + 2 * m + r) as f64).unwrap();
        let det = log_partition(&theta).unwrap().log_z;
        let closed = chronological_log_partition(&theta).unwrap();
        assert_relative_eq!(det, closed, max_relative = 1e-12);
    }

    #[test]
    fn disconnected_general_graph_is_singular() {
        // Nodes 1 and 2 only point at each other: no arborescence exists.
        let mut mask = Array3::from_elem((3, 3, 1), false);
        mask[(1, 2, 0)] = true;
        mask[(2, 1, 0)] = true;
        let theta = ScoreTensor::from_parts(Mode::General, Array3::zeros((3, 3, 1)), mask).unwrap();
        let err = log_partition(&theta).unwrap_err();
        assert!(err.is_numerical(), "{err}");
    }

    #[test]
    fn fault_hook_changes_general_partition() {
        // with n = 2 the flip cancels in the determinant
        let theta = ScoreTensor::zeros(3, 1, Mode::General);
        let clean = log_partition(&theta).unwrap().log_z;
        inject_laplacian_sign_fault(true);
        let faulty = log_partition(&theta).map(|r| r.log_z);
        inject_laplacian_sign_fault(false);
        assert!(faulty.map_or(true, |f| (f - clean).abs() > 1e-6));
    }
}
