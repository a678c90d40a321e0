//! Gold-tree likelihood training for the linear scorer.
//!
//! The objective for a batch `B` is
//!
//! ```text
//! loss(w) = -Σ_{(d, T) ∈ B} log P(T | θ_w(d)) + (l2 / 2) · ‖w‖²
//! ```
//!
//! and its gradient with respect to `w[f][r]` is
//! `Σ_{d, h, m} x_f(h, m) · (μ[h][m][r] - 1[(h, m, r) ∈ T]) + l2 · w[f][r]`.
//! The objective is convex in `w`.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::padded_batch_log_det;
use crate::matrix_tree::{inference, laplacian_minor, potentials, tree_log_score, LogZResult};
use crate::scorer::{LinearScorerModel, PairFeatures};
use crate::types::{Dialogue, LabeledTree};

/// Relative tolerance between batched (padded) and per-instance `log Z`.
const BATCH_LOG_Z_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    pub batch_size: usize,
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 20,
            l2: 1e-4,
            seed: 13,
            batch_size: 4,
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning_rate must be positive");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return fail("l2 must be non-negative");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return fail("clip_norm must be positive");
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

/// A dialogue, its gold tree and cached pair features.
struct Instance<'a> {
    id: &'a str,
    tree: &'a LabeledTree,
    pairs: PairFeatures,
}

fn prepare<'a>(model: &LinearScorerModel, corpus: &'a [(Dialogue, LabeledTree)]) -> Result<Vec<Instance<'a>>> {
    corpus
        .iter()
        .map(|(d, t)| {
            if t.n() != d.len() {
                return Err(Error::Mismatch {
                    id: d.id().to_owned(),
                    message: format!("tree has {} nodes, dialogue has {}", t.n(), d.len()),
                });
            }
            t.validate().map_err(|v| Error::InvalidTree(v).in_dialogue(d.id()))?;
            Ok(Instance {
                id: d.id(),
                tree: t,
                pairs: PairFeatures::new(model.space(), d),
            })
        })
        .collect()
}

struct InstanceTerms {
    nll: f64,
    grad: Vec<f64>,
    minor: Array2<f64>,
    n: usize,
    log_z: LogZResult,
}

fn instance_terms(model: &LinearScorerModel, inst: &Instance<'_>) -> Result<InstanceTerms> {
    let n = inst.pairs.n();
    let theta = model.score_pairs(n, &inst.pairs)?;
    let (log_z, mu) = inference(&theta)?;
    let gold = tree_log_score(&theta, inst.tree)?;
    let minor = laplacian_minor(&potentials(&theta)?);
    let mut grad = vec![0.0; model.weights().len()];
    for m in 1..=n {
        let gold_edge = inst.tree.edge_of(m).expect("validated tree");
        for h in 0..m {
            let x = inst.pairs.get(h, m);
            for r in 0..theta.num_relations() {
                let mut delta = mu.get(h, m, r);
                if gold_edge.head == h && gold_edge.relation == r {
                    delta -= 1.0;
                }
                if delta == 0.0 {
                    continue;
                }
                for &(f, v) in &x.0 {
                    grad[model.weight_index(f, r)] += v * delta;
                }
            }
        }
    }
    Ok(InstanceTerms {
        nll: log_z.log_z - gold,
        grad,
        minor,
        n,
        log_z,
    })
}

/// Summed negative log-likelihood and its gradient (without the L2 term).
///
/// Instances are processed in parallel and reduced in batch order.
fn nll_terms(model: &LinearScorerModel, batch: &[&Instance<'_>]) -> Result<(f64, Vec<f64>)> {
    let terms = batch
        .par_iter()
        .map(|inst| instance_terms(model, inst).map_err(|e| e.in_dialogue(inst.id)))
        .collect::<Result<Vec<_>>>()?;
    check_batched_log_z(batch, &terms)?;
    let mut loss = 0.0;
    let mut grad = vec![0.0; model.weights().len()];
    for t in terms {
        loss += t.nll;
        for (acc, v) in grad.iter_mut().zip(t.grad) {
            *acc += v;
        }
    }
    Ok((loss, grad))
}

/// Recomputes every instance's `log Z` from the identity-padded batched
/// determinant of the Laplacian minors and checks it against per-instance
/// inference.
fn check_batched_log_z(batch: &[&Instance<'_>], terms: &[InstanceTerms]) -> Result<()> {
    let minors: Vec<Array2<f64>> = terms.iter().map(|t| t.minor.clone()).collect();
    let target = minors.iter().map(Array2::nrows).max().unwrap_or(0);
    let batched = padded_batch_log_det(&minors, target);
    for ((inst, t), det) in batch.iter().zip(terms).zip(batched) {
        let det = det.map_err(|e| e.in_dialogue(inst.id))?;
        let log_z = det.log_abs + t.n as f64 * t.log_z.stabilization_shift;
        let scale = t.log_z.log_z.abs().max(1.0);
        if det.sign <= 0.0 || (log_z - t.log_z.log_z).abs() > BATCH_LOG_Z_TOLERANCE * scale {
            return Err(Error::Mismatch {
                id: inst.id.to_owned(),
                message: format!(
                    "padded batch log Z {log_z} disagrees with per-instance {}",
                    t.log_z.log_z
                ),
            });
        }
    }
    Ok(())
}

fn l2_penalty(weights: &[f64], l2: f64) -> f64 {
    0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// `-Σ log P(gold) + (l2/2)·‖w‖²` over `batch`, and its exact gradient.
pub fn loss_and_gradient(
    model: &LinearScorerModel,
    batch: &[(Dialogue, LabeledTree)],
    l2: f64,
) -> Result<(f64, Vec<f64>)> {
    let instances = prepare(model, batch)?;
    let refs: Vec<&Instance<'_>> = instances.iter().collect();
    let (nll, mut grad) = nll_terms(model, &refs)?;
    for (g, w) in grad.iter_mut().zip(model.weights()) {
        *g += l2 * w;
    }
    Ok((nll + l2_penalty(model.weights(), l2), grad))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean negative log-likelihood per dialogue plus `(l2/2)·‖w‖²`,
    /// measured over the whole corpus after the epoch's updates.
    pub objective: f64,
    pub mean_nll: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: LinearScorerModel,
    pub trace: Vec<EpochStats>,
}

/// Mini-batch gradient descent on the mean per-dialogue objective.
///
/// Each step moves along `-(Σ_batch ∇nll / |batch| + l2·w)`, optionally
/// clipped to `clip_norm`. Batches are drawn from a per-epoch shuffle seeded
/// by `config.seed`; the result is deterministic for a given corpus and
/// config.
pub fn train(
    model: LinearScorerModel,
    corpus: &[(Dialogue, LabeledTree)],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut model = model;
    let instances = prepare(&model, corpus)?;
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = Vec::with_capacity(config.epochs);
    let all: Vec<&Instance<'_>> = instances.iter().collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&Instance<'_>> = chunk.iter().map(|&i| &instances[i]).collect();
            let (nll, mut grad) = nll_terms(&model, &batch)?;
            if !nll.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    batch: b + 1,
                    loss: nll,
                });
            }
            let scale = 1.0 / batch.len() as f64;
            for (g, w) in grad.iter_mut().zip(model.weights()) {
                *g = *g * scale + config.l2 * w;
            }
            if let Some(clip) = config.clip_norm {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > clip {
                    grad.iter_mut().for_each(|g| *g *= clip / norm);
                }
            }
            for (w, g) in model.weights_mut().iter_mut().zip(&grad) {
                *w -= config.learning_rate * g;
            }
        }
        let (nll, _) = nll_terms(&model, &all)?;
        let mean_nll = nll / instances.len() as f64;
        let objective = mean_nll + l2_penalty(model.weights(), config.l2);
        if !objective.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: order.len().div_ceil(config.batch_size),
                loss: objective,
            });
        }
        trace.push(EpochStats {
            epoch,
            objective,
            mean_nll,
        });
    }
    Ok(TrainOutcome { model, trace })
}

/// Writes the loss trace as CSV with a header row.
pub fn write_trace(mut out: impl std::io::Write, trace: &[EpochStats]) -> Result<()> {
    writeln!(out, "epoch,objective,mean_nll")?;
    for s in trace {
        writeln!(out, "{},{},{}", s.epoch, s.objective, s.mean_nll)?;
    }
    Ok(())
}
