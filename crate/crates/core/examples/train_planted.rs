//! Trains the linear scorer on the planted corpus and scores the held-out
//! split.
//!
//! ```text
//! cargo run --release --example train_planted -- [DATA_DIR]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use discotree::corpus::{read_corpus, LoadOptions, SourceFormat};
use discotree::pipeline::parse_dialogues;
use discotree::scorer::DEFAULT_ROOT_TEXT;
use discotree::{evaluate, train, EvalConfig, FeatureSpace, LinearScorerModel, TrainConfig};

fn main() -> discotree::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/planted"));
    let options = LoadOptions::default();
    let (train_corpus, _) = read_corpus(&dir.join("train.jsonl"), SourceFormat::Canonical, &options)?;
    let (heldout, _) = read_corpus(&dir.join("heldout.jsonl"), SourceFormat::Canonical, &options)?;

    let (pairs, _) = train_corpus.treeified();
    let space = FeatureSpace::from_corpus(&train_corpus.dialogues, DEFAULT_ROOT_TEXT);
    let config = TrainConfig::default();
    let start = Instant::now();
    let outcome = train(
        LinearScorerModel::zeros(space, train_corpus.labels.clone()),
        &pairs,
        &config,
    )?;
    for s in &outcome.trace {
        println!("epoch {:>2}  objective {:.5}", s.epoch, s.objective);
    }
    println!("trained in {:.2?}", start.elapsed());

    let parses = parse_dialogues(&outcome.model, &heldout.dialogues, None)?;
    let predicted = parses.into_iter().map(|p| (p.id, p.tree)).collect();
    let (gold, _) = heldout.treeified();
    let gold = gold.into_iter().map(|(d, t)| (d.id().to_owned(), t)).collect();
    let report = evaluate(&predicted, &gold, &heldout.labels, &EvalConfig::default())?;
    print!("{}", report.render_table());
    Ok(())
}
