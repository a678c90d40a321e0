//! Log-partition and edge marginals for a small labeled score tensor.
//!
//! ```text
//! cargo run --example partition_function -- [N] [RELATIONS] [SEED]
//! ```

use discotree::matrix_tree::chronological_log_partition;
use discotree::synth::random_score_tensor;
use discotree::{inference, Mode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arg(i: usize, default: u64) -> u64 {
    std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default)
}

fn main() -> discotree::Result<()> {
    let n = arg(1, 5) as usize;
    let r = arg(2, 3) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(arg(3, 1));

    for mode in [Mode::Chronological, Mode::General] {
        let theta = random_score_tensor(n, r, mode, 2.0, &mut rng);
        let (lz, mu) = inference(&theta)?;
        println!("{mode}: n={n} R={r}");
        println!("  log Z = {:.12} (shift {:.4})", lz.log_z, lz.stabilization_shift);
        if mode == Mode::Chronological {
            println!("  closed form log Z = {:.12}", chronological_log_partition(&theta)?);
        }
        println!("  P(head | dependent), summed over relations:");
        for m in 1..=n {
            let row: Vec<String> = (0..=n)
                .map(|h| format!("{:.3}", (0..r).map(|k| mu.get(h, m, k)).sum::<f64>()))
                .collect();
            println!("    m={m}: [{}]  total {:.6}", row.join(", "), mu.incoming_mass(m));
        }
    }
    Ok(())
}
