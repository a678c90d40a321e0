//! Log-determinants of Laplacian minors of mixed sizes, computed one at a
//! time and as an identity-padded batch.
//!
//! ```text
//! cargo run --example batched_determinants -- [COUNT] [SEED]
//! ```

use discotree::linalg::{log_det, padded_batch_log_det};
use discotree::matrix_tree::{laplacian_minor, potentials};
use discotree::synth::random_score_tensor;
use discotree::Mode;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> discotree::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<u64>().ok());
    let count = args.next().flatten().unwrap_or(8) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(args.next().flatten().unwrap_or(3));

    let minors: Vec<Array2<f64>> = (0..count)
        .map(|_| {
            let n = rng.random_range(1..=8);
            let theta = random_score_tensor(n, 2, Mode::General, 1.0, &mut rng);
            potentials(&theta).map(|p| laplacian_minor(&p))
        })
        .collect::<discotree::Result<_>>()?;
    let target = minors.iter().map(|m| m.nrows()).max().unwrap_or(0);
    let batched = padded_batch_log_det(&minors, target);

    println!("{:>4}  {:>20}  {:>20}  {:>9}", "size", "single", "padded", "|diff|");
    for (m, padded) in minors.iter().zip(batched) {
        let single = log_det(m.view())?;
        let padded = padded?;
        println!(
            "{:>4}  {:>20.14}  {:>20.14}  {:>9.1e}",
            m.nrows(),
            single.log_abs,
            padded.log_abs,
            (single.log_abs - padded.log_abs).abs()
        );
    }
    println!("padded to {target}x{target}");
    Ok(())
}
