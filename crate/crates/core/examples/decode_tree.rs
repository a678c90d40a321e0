//! Maximum-scoring labeled trees, with the greedy and Chu-Liu-Edmonds
//! decoders compared on the same tensors.
//!
//! ```text
//! cargo run --example decode_tree -- [N] [SEED]
//! ```

use discotree::decoder::{decode_cle, decode_greedy};
use discotree::synth::random_score_tensor;
use discotree::{decode_optimality_check, tree_log_prob, tree_log_score, LabeledTree, Mode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn show(tree: &LabeledTree) -> String {
    tree.edges()
        .iter()
        .map(|e| format!("{}->{}:{}", e.head, e.dependent, e.relation))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> discotree::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<u64>().ok());
    let n = args.next().flatten().unwrap_or(6) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(args.next().flatten().unwrap_or(11));

    let theta = random_score_tensor(n, 3, Mode::Chronological, 2.0, &mut rng);
    let greedy = decode_greedy(&theta)?;
    let cle = decode_cle(&theta)?;
    println!("chronological, n={n}");
    println!("  greedy: {}", show(&greedy));
    println!("  CLE:    {}", show(&cle));
    println!("  same tree: {}", greedy == cle);
    println!(
        "  score {:.4}, log P {:.4}, optimal: {}",
        tree_log_score(&theta, &greedy)?,
        tree_log_prob(&theta, &greedy)?,
        decode_optimality_check(&theta, &greedy)
    );

    let theta = random_score_tensor(n, 3, Mode::General, 2.0, &mut rng);
    let cle = decode_cle(&theta)?;
    println!("general, n={n}");
    println!("  CLE:    {}", show(&cle));
    println!(
        "  score {:.4}, log P {:.4}, optimal: {}",
        tree_log_score(&theta, &cle)?,
        tree_log_prob(&theta, &cle)?,
        decode_optimality_check(&theta, &cle)
    );
    Ok(())
}
