//! Runs the numerical self-checks: brute-force enumeration, closed-form
//! counts, finite-difference gradients, padding, decoding and shift
//! invariance.
//!
//! ```text
//! cargo run --release --example verify_suites -- [INSTANCES] [SEED]
//! ```

use discotree::verify::{run_all, VerifyConfig};

fn main() {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<u64>().ok());
    let defaults = VerifyConfig::default();
    let config = VerifyConfig {
        instances: args.next().flatten().map_or(defaults.instances, |i| i as usize),
        seed: args.next().flatten().unwrap_or(defaults.seed),
    };
    let reports = run_all(&config);
    for r in &reports {
        println!("{}", r.summary());
    }
    if reports.iter().any(|r| !r.passed()) {
        std::process::exit(3);
    }
}
