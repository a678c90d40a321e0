//! Regenerates the planted-model corpus shipped in `data/planted/`.
//!
//! ```text
//! cargo run --example generate_planted -- [OUTPUT_DIR]
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use discotree::synth::{generate_planted, PlantedConfig};

fn main() -> discotree::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/planted"));
    std::fs::create_dir_all(&dir)?;
    let config = PlantedConfig::default();
    let planted = generate_planted(&config)?;
    planted
        .train
        .write_canonical(BufWriter::new(File::create(dir.join("train.jsonl"))?))?;
    planted
        .heldout
        .write_canonical(BufWriter::new(File::create(dir.join("heldout.jsonl"))?))?;
    planted
        .model
        .save(BufWriter::new(File::create(dir.join("planted_model.json"))?))?;

    let (_, report) = planted.train.treeified();
    println!(
        "{} train + {} held-out dialogues from {} samples (margin {})",
        planted.train.dialogues.len(),
        planted.heldout.dialogues.len(),
        planted.attempts,
        config.margin
    );
    println!(
        "train: {} non-root gold edges, {} root attachments",
        report.input_edges, report.root_attached
    );
    println!("written to {}", dir.display());
    Ok(())
}
