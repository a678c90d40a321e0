//! Decodes score tensors computed by another system.
//!
//! ```text
//! cargo run --example import_scores -- [SCORES.jsonl CORPUS.jsonl]
//! ```
//!
//! Each record carries its relation names, ending in `<root>`.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use discotree::corpus::{read_corpus, LoadOptions, SourceFormat};
use discotree::pipeline::parse_dialogues;
use discotree::scorer::{read_score_records, ImportedScores};
use discotree::types::RESERVED_ROOT_LABEL;
use discotree::{EdgeScorer, LabelSet, RelationVocab};

fn main() -> discotree::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let (scores, corpus) = match args.as_slice() {
        [s, c] => (s.clone(), c.clone()),
        _ => (fixtures.join("scores_mini.jsonl"), fixtures.join("scores_corpus.jsonl")),
    };

    let records = read_score_records(BufReader::new(File::open(&scores)?))?;
    let names = records.iter().find_map(|r| r.labels.clone()).unwrap_or_default();
    let relations = names.iter().filter(|n| *n != RESERVED_ROOT_LABEL).cloned();
    let labels = LabelSet::reserved(RelationVocab::new(relations)?);
    let scorer = ImportedScores::new(labels, &records)?;

    let options = LoadOptions {
        vocab: Some(scorer.labels().vocab().clone()),
        root_label: None,
    };
    let (corpus, _) = read_corpus(&corpus, SourceFormat::Canonical, &options)?;
    for p in parse_dialogues(&scorer, &corpus.dialogues, None)? {
        let edges: Vec<String> = p
            .tree
            .edges()
            .iter()
            .map(|e| {
                format!(
                    "{}->{} {}",
                    e.head,
                    e.dependent,
                    scorer.labels().label(e.relation).unwrap_or("?")
                )
            })
            .collect();
        println!("{}  log P {:.4}", p.id, p.log_prob);
        for e in edges {
            println!("  {e}");
        }
    }
    Ok(())
}
