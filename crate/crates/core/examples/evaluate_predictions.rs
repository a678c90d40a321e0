//! UAS/LAS of a predictions file against gold trees, with the per-length
//! and per-relation breakdowns.
//!
//! ```text
//! cargo run --example evaluate_predictions -- [PRED GOLD]
//! ```

use std::path::PathBuf;

use discotree::corpus::{align_tree_banks, load_tree_bank};
use discotree::{evaluate, EvalConfig};

fn main() -> discotree::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let (pred, gold) = match args.as_slice() {
        [p, g] => (p.clone(), g.clone()),
        _ => (fixtures.join("eval_pred.jsonl"), fixtures.join("eval_gold.jsonl")),
    };
    let pred = load_tree_bank(&std::fs::read_to_string(pred)?, None)?;
    let gold = load_tree_bank(&std::fs::read_to_string(gold)?, None)?;
    let (pred, gold) = align_tree_banks(&pred, &gold)?;

    for include_root_edges in [false, true] {
        let config = EvalConfig {
            include_root_edges,
            ..Default::default()
        };
        let report = evaluate(&pred.trees, &gold.trees, &gold.labels, &config)?;
        println!(
            "root edges {}:",
            if include_root_edges { "included" } else { "excluded" }
        );
        print!("{}", report.render_table());
        println!();
    }
    Ok(())
}
