//! Loads a STAC- or Molweni-shaped file and reports how much of the
//! annotated graph survives conversion to trees.
//!
//! ```text
//! cargo run --example treeify_corpus -- [FILE FORMAT]
//! ```
//!
//! Without arguments both bundled fixtures are processed.

use std::path::{Path, PathBuf};

use discotree::corpus::{read_corpus, LoadOptions, SourceFormat};

fn report(path: &Path, format: SourceFormat) -> discotree::Result<()> {
    let (corpus, ingest) = read_corpus(path, format, &LoadOptions::default())?;
    let (pairs, tree) = corpus.treeified();
    println!("{}", path.display());
    println!(
        "  {} dialogues, {} relations ({} backward links dropped), {} labels",
        ingest.dialogues,
        ingest.edges,
        ingest.backward_dropped,
        corpus.labels.vocab().len()
    );
    println!(
        "  discarded {} of {} edges ({:.2}%), {} root attachments",
        tree.discarded,
        tree.input_edges,
        100.0 * tree.discard_fraction(),
        tree.root_attached
    );
    if let Some((d, t)) = pairs.first() {
        println!("  {}:", d.id());
        for e in t.edges() {
            let label = corpus.labels.label(e.relation).unwrap_or("?");
            println!("    {:>2} -> {:>2}  {label}", e.head, e.dependent);
        }
    }
    Ok(())
}

fn main() -> discotree::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [file, format] = args.as_slice() {
        return report(&PathBuf::from(file), format.parse()?);
    }
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    report(&fixtures.join("stac_mini.json"), SourceFormat::Stac)?;
    report(&fixtures.join("molweni_mini.json"), SourceFormat::Molweni)
}
