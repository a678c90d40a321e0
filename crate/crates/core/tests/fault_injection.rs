mod common;

use discotree::matrix_tree::inject_laplacian_sign_fault;
use discotree::synth::random_score_tensor;
use discotree::verify::{run_suite, VerifyConfig};
use discotree::{log_partition, marginals, Mode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Clears the hook even when an assertion fails mid-test.
struct Fault;

impl Fault {
    fn on() -> Self {
        inject_laplacian_sign_fault(true);
        Fault
    }
}

impl Drop for Fault {
    fn drop(&mut self) {
        inject_laplacian_sign_fault(false);
    }
}

#[test]
fn flipped_laplacian_signs_are_caught_by_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let theta = random_score_tensor(4, 2, Mode::General, 1.0, &mut rng);
    let brute = common::brute_force(&theta);
    assert!((log_partition(&theta).unwrap().log_z - brute.log_z).abs() < 1e-10);

    let _fault = Fault::on();
    let broken = log_partition(&theta).map(|r| r.log_z);
    assert!(broken.map_or(true, |lz| (lz - brute.log_z).abs() > 1e-6));
}

/// The chronological minor is triangular: its determinant and the inverse
/// entries the marginals read depend only on the diagonal. Coverage of the
/// off-diagonal signs has to come from general-mode checks.
#[test]
fn chronological_mode_is_blind_to_the_fault() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let theta = random_score_tensor(4, 2, Mode::Chronological, 1.0, &mut rng);
    let brute = common::brute_force(&theta);
    let _fault = Fault::on();
    assert!((log_partition(&theta).unwrap().log_z - brute.log_z).abs() < 1e-10);
    let mu = marginals(&theta).unwrap();
    let worst = (&mu.values() - &brute.marginals)
        .iter()
        .fold(0.0f64, |a, b| a.max(b.abs()));
    assert!(worst < 1e-10);
}

#[test]
fn enumeration_suite_fails_under_the_fault() {
    let config = VerifyConfig { seed: 1, instances: 2 };
    assert!(run_suite("enumeration", &config).unwrap().passed());
    let _fault = Fault::on();
    assert!(!run_suite("enumeration", &config).unwrap().passed());
}
