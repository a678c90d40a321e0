//! Self-checks of the inference, decoding and training code against
//! independent references: exhaustive enumeration, closed-form counts and
//! finite differences. Runs single-threaded and deterministically.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoder::{decode_cle, decode_greedy, decode_optimality_check, decode_tree};
use crate::linalg::{identity_pad, log_det, padded_batch_log_det};
use crate::matrix_tree::{chronological_log_partition, inference, log_partition, tree_log_score};
use crate::oracle;
use crate::scorer::DEFAULT_ROOT_TEXT;
use crate::synth::{full_feature_space, planted_labels, random_dialogue, random_model, random_score_tensor};
use crate::trainer::loss_and_gradient;
use crate::types::{LabelSet, LabeledTree, Mode, ScoreTensor};
use ndarray::Array2;

pub const SUITES: [&str; 6] = [
    "enumeration",
    "analytic-counts",
    "gradients",
    "padding",
    "decoding",
    "shift-invariance",
];

const MODES: [Mode; 2] = [Mode::Chronological, Mode::General];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random instances per (n, R, mode) configuration.
    pub instances: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { seed: 7, instances: 25 }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// `PASS name (checks, time)` or `FAIL ...` plus the first failure.
    pub fn summary(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut line = format!(
            "{status} {:<17} {:>6} checks  {:>8.2?}",
            self.name, self.checks, self.elapsed
        );
        if let Some(first) = self.failures.first() {
            line.push_str(&format!("  first failure: {first}"));
            if self.failures.len() > 1 {
                line.push_str(&format!(" (+{} more)", self.failures.len() - 1));
            }
        }
        line
    }
}

struct Checker {
    checks: usize,
    failures: Vec<String>,
}

impl Checker {
    fn new() -> Self {
        Checker {
            checks: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(describe());
        }
    }

    fn ok<T>(&mut self, result: crate::Result<T>, context: impl FnOnce() -> String) -> Option<T> {
        match result {
            Ok(v) => Some(v),
            Err(e) => {
                self.checks += 1;
                self.failures.push(format!("{}: {e}", context()));
                None
            }
        }
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs one suite by name; `None` for unknown names.
pub fn run_suite(name: &str, config: &VerifyConfig) -> Option<SuiteReport> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut c = Checker::new();
    let name = *SUITES.iter().find(|s| **s == name)?;
    match name {
        "enumeration" => enumeration(&mut c, &mut rng, config.instances),
        "analytic-counts" => analytic_counts(&mut c),
        "gradients" => gradients(&mut c, &mut rng, config.instances),
        "padding" => padding(&mut c, &mut rng, config.instances * 4),
        "decoding" => decoding(&mut c, &mut rng, config.instances),
        "shift-invariance" => shift_invariance(&mut c, &mut rng, config.instances),
        _ => unreachable!(),
    }
    Some(SuiteReport {
        name,
        checks: c.checks,
        failures: c.failures,
        elapsed: start.elapsed(),
    })
}

pub fn run_all(config: &VerifyConfig) -> Vec<SuiteReport> {
    SUITES.iter().filter_map(|s| run_suite(s, config)).collect()
}

fn enumeration(c: &mut Checker, rng: &mut ChaCha8Rng, instances: usize) {
    for mode in MODES {
        for n in 1..=4 {
            for r in 1..=3 {
                for i in 0..instances {
                    let theta = random_score_tensor(n, r, mode, 3.0, rng);
                    let ctx = || format!("{mode} n={n} R={r} #{i}");
                    let Some((lz, mu)) = c.ok(inference(&theta), ctx) else {
                        continue;
                    };
                    let brute = oracle::log_partition(&theta).expect("complete tensors have trees");
                    // relative error of Z itself
                    let z_err = (lz.log_z - brute).exp_m1().abs();
                    c.check(z_err <= 1e-9, || format!("{}: Z relative error {z_err:e}", ctx()));
                    let brute_mu = oracle::marginals(&theta).expect("trees exist");
                    let mu_err = mu
                        .values()
                        .iter()
                        .zip(brute_mu.iter())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    c.check(mu_err <= 1e-9, || format!("{}: marginal error {mu_err:e}", ctx()));
                    if mode == Mode::Chronological {
                        if let Some(closed) = c.ok(chronological_log_partition(&theta), ctx) {
                            let err = (closed - brute).exp_m1().abs();
                            c.check(err <= 1e-9, || format!("{}: closed form error {err:e}", ctx()));
                        }
                    }
                }
            }
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn analytic_counts(c: &mut Checker) {
    for r in 1..=3usize {
        for n in 1..=6usize {
            let expected = factorial(n) * (r as f64).powi(n as i32);
            count_case(c, ScoreTensor::zeros(n, r, Mode::Chronological), expected);
        }
        for n in 1..=4usize {
            let expected = ((n + 1) as f64).powi(n as i32 - 1) * (r as f64).powi(n as i32);
            count_case(c, ScoreTensor::zeros(n, r, Mode::General), expected);
        }
    }
}

fn count_case(c: &mut Checker, theta: ScoreTensor, expected: f64) {
    let (n, r, mode) = (theta.n(), theta.num_relations(), theta.mode());
    if let Some(lz) = c.ok(log_partition(&theta), || format!("{mode} n={n} R={r}")) {
        let z = lz.log_z.exp();
        c.check(rel_err(z, expected) <= 1e-9, || {
            format!("{mode} n={n} R={r}: Z = {z}, expected {expected}")
        });
    }
    let count = oracle::count_trees(&theta) as f64;
    c.check(count == expected, || {
        format!("{mode} n={n} R={r}: enumerated {count} trees, expected {expected}")
    });
}

fn gradients(c: &mut Checker, rng: &mut ChaCha8Rng, instances: usize) {
    const EPS: f64 = 1e-5;
    const TOL: f64 = 1e-5;
    for i in 0..instances * 2 {
        let mode = MODES[i % 2];
        let n = rng.random_range(1..=4);
        let r = rng.random_range(1..=3);
        let theta = random_score_tensor(n, r, mode, 2.0, rng);
        let ctx = || format!("{mode} n={n} R={r} #{i}");
        let Some((_, mu)) = c.ok(inference(&theta), ctx) else {
            continue;
        };
        let mut worst: f64 = 0.0;
        for h in 0..=n {
            for m in 1..=n {
                for rel in 0..r {
                    if !theta.is_permitted(h, m, rel) {
                        continue;
                    }
                    let bump = |d: f64| {
                        theta
                            .map_permitted(|a, b, k, v| if (a, b, k) == (h, m, rel) { v + d } else { v })
                            .and_then(|t| log_partition(&t))
                            .map(|z| z.log_z)
                    };
                    if let (Ok(up), Ok(down)) = (bump(EPS), bump(-EPS)) {
                        worst = worst.max(((up - down) / (2.0 * EPS) - mu.get(h, m, rel)).abs());
                    } else {
                        worst = f64::INFINITY;
                    }
                }
            }
        }
        c.check(worst <= TOL, || {
            format!("{}: marginal vs finite difference {worst:e}", ctx())
        });
    }

    let labels = planted_labels();
    let space = full_feature_space(DEFAULT_ROOT_TEXT);
    let model = random_model(space, labels.clone(), 0.5, rng);
    let corpus: Vec<_> = (0..5)
        .map(|k| {
            let n = rng.random_range(2..=5);
            let d = random_dialogue(&format!("fd-{k}"), n, rng);
            (d, random_gold_tree(n, &labels, rng))
        })
        .collect();
    let l2 = 0.01;
    let Some((_, grad)) = c.ok(loss_and_gradient(&model, &corpus, l2), || "trainer gradient".into()) else {
        return;
    };
    let mut worst: f64 = 0.0;
    for (j, g) in grad.iter().enumerate() {
        let loss_at = |d: f64| {
            let mut m = model.clone();
            m.weights_mut()[j] += d;
            loss_and_gradient(&m, &corpus, l2).map(|(l, _)| l)
        };
        match (loss_at(EPS), loss_at(-EPS)) {
            (Ok(up), Ok(down)) => worst = worst.max(((up - down) / (2.0 * EPS) - g).abs()),
            _ => worst = f64::INFINITY,
        }
    }
    c.check(worst <= TOL, || {
        format!("trainer gradient vs finite difference {worst:e}")
    });
}

/// Random chronological tree whose root edges carry the root relation.
pub fn random_gold_tree(n: usize, labels: &LabelSet, rng: &mut impl Rng) -> LabeledTree {
    let parents: Vec<(usize, usize)> = (1..=n)
        .map(|m| {
            let h = rng.random_range(0..m);
            let r = if h == 0 {
                labels.root_id()
            } else {
                rng.random_range(0..labels.vocab().len())
            };
            (h, r)
        })
        .collect();
    LabeledTree::from_parents(&parents)
}

fn padding(c: &mut Checker, rng: &mut ChaCha8Rng, instances: usize) {
    for i in 0..instances {
        let size = rng.random_range(1..=8);
        let m = Array2::from_shape_fn((size, size), |_| rng.random_range(-1.0..1.0));
        let Some(plain) = c.ok(log_det(m.view()), || format!("matrix #{i}")) else {
            continue;
        };
        for target in size..=12 {
            let padded = identity_pad(m.view(), target).and_then(|p| log_det(p.view()));
            let Some(padded) = c.ok(padded, || format!("matrix #{i} padded to {target}")) else {
                continue;
            };
            // |Δ log|det|| bounds the relative error of the determinant
            let ok = padded.sign == plain.sign && (padded.log_abs - plain.log_abs).abs() <= 1e-12;
            c.check(ok, || {
                format!("size {size} -> {target}: {} vs {}", padded.log_abs, plain.log_abs)
            });
        }
    }
    let batch: Vec<Array2<f64>> = (1..=8)
        .map(|s| Array2::from_shape_fn((s, s), |(a, b)| if a == b { 2.0 + a as f64 } else { 0.1 }))
        .collect();
    for target in [8, 9, 12] {
        for (k, det) in padded_batch_log_det(&batch, target).into_iter().enumerate() {
            let want = log_det(batch[k].view()).map(|d| d.log_abs);
            c.check(
                matches!((&det, &want), (Ok(d), Ok(w)) if (d.log_abs - w).abs() <= 1e-12),
                || format!("batched entry {k} padded to {target}"),
            );
        }
    }
}

fn decoding(c: &mut Checker, rng: &mut ChaCha8Rng, instances: usize) {
    for mode in MODES {
        for n in 1..=4 {
            for r in 1..=3 {
                for i in 0..instances {
                    let theta = random_score_tensor(n, r, mode, 3.0, rng);
                    let ctx = || format!("{mode} n={n} R={r} #{i}");
                    let Some(tree) = c.ok(decode_tree(&theta), ctx) else {
                        continue;
                    };
                    let (best, _) = oracle::best_tree(&theta).expect("trees exist");
                    let score = tree_log_score(&theta, &tree).unwrap_or(f64::NAN);
                    c.check((score - best).abs() <= 1e-12, || {
                        format!("{}: decoded score {score}, best {best}", ctx())
                    });
                    c.check(decode_optimality_check(&theta, &tree), || {
                        format!("{}: decoded edge lacks its best relation", ctx())
                    });
                    if mode == Mode::Chronological {
                        let cle = decode_cle(&theta);
                        let greedy = decode_greedy(&theta);
                        c.check(matches!((&cle, &greedy), (Ok(a), Ok(b)) if a == b), || {
                            format!("{}: CLE and greedy disagree", ctx())
                        });
                    }
                }
            }
        }
    }
}

fn shift_invariance(c: &mut Checker, rng: &mut ChaCha8Rng, instances: usize) {
    for i in 0..instances * 2 {
        let mode = MODES[i % 2];
        let n = rng.random_range(1..=6);
        let r = rng.random_range(1..=3);
        let theta = random_score_tensor(n, r, mode, 3.0, rng);
        let shift = rng.random_range(-500.0..500.0);
        let moved = theta.map_permitted(|_, _, _, v| v + shift).expect("finite");
        let ctx = || format!("{mode} n={n} R={r} shift={shift:.1}");
        if let (Some(a), Some(b)) = (c.ok(log_partition(&theta), ctx), c.ok(log_partition(&moved), ctx)) {
            let expected = a.log_z + n as f64 * shift;
            c.check(
                rel_err(b.log_z, expected) <= 1e-9 || (b.log_z - expected).abs() <= 1e-9,
                || format!("{}: log Z {} vs {expected}", ctx(), b.log_z),
            );
        }
        let same = matches!((decode_tree(&theta), decode_tree(&moved)), (Ok(a), Ok(b)) if a == b);
        c.check(same, || format!("{}: decoded tree changed", ctx()));
    }
    // scores far beyond exp's range still give finite results
    let huge = ScoreTensor::from_fn(3, 2, Mode::General, |h, m, r| 1e4 + (h * 3 + m + r) as f64).expect("finite");
    let ok = log_partition(&huge).map(|z| z.log_z.is_finite()).unwrap_or(false);
    c.check(ok, || "log Z overflowed for scores near 1e4".into());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_tree::inject_laplacian_sign_fault;

    fn quick() -> VerifyConfig {
        VerifyConfig { seed: 3, instances: 2 }
    }

    #[test]
    fn all_suites_pass() {
        for report in run_all(&quick()) {
            assert!(report.passed(), "{}", report.summary());
        }
    }

    #[test]
    fn sign_fault_breaks_enumeration() {
        inject_laplacian_sign_fault(true);
        let report = run_suite("enumeration", &quick()).unwrap();
        inject_laplacian_sign_fault(false);
        assert!(!report.passed());
    }
}
