//! The `discotree` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error
//! (singular Laplacian, divergence, or a failed verification suite).

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::corpus::{
    align_tree_banks, load_tree_bank, parse_corpus, write_predictions, Corpus, LoadOptions, PredictionRecord,
    SourceFormat,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig};
use crate::pipeline::parse_dialogues;
use crate::scorer::{
    read_score_records, EdgeScorer, FeatureSpace, ImportedScores, LinearScorerModel, DEFAULT_ROOT_TEXT,
};
use crate::trainer::{train, write_trace, TrainConfig};
use crate::types::{LabelSet, Mode, RelationVocab, RESERVED_ROOT_LABEL};
use crate::verify::{run_all, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "discotree", version, about = "Matrix-tree discourse parsing toolkit")]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert a STAC, Molweni or canonical file to the canonical corpus format.
    Ingest(IngestArgs),
    /// Train a linear scorer on a corpus.
    Train(TrainArgs),
    /// Decode a corpus with a trained model or imported score tensors.
    Parse(ParseArgs),
    /// Score predictions against gold trees.
    Eval(EvalArgs),
    /// Run the built-in verification suites.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct VocabArgs {
    /// File with one relation label per line; fixes label ids.
    #[arg(long)]
    relations: Option<PathBuf>,
    /// Corpus label to use for root attachments instead of `<root>`.
    #[arg(long)]
    root_label: Option<String>,
}

#[derive(Args, Debug)]
struct IngestArgs {
    input: PathBuf,
    #[arg(long, default_value = "canonical", value_parser = ["stac", "molweni", "canonical"])]
    format: String,
    #[command(flatten)]
    vocab: VocabArgs,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    corpus: PathBuf,
    /// TOML training config; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    output: PathBuf,
    /// CSV file for the per-epoch loss trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Overrides the config's shuffling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Text of the dummy root utterance.
    #[arg(long, default_value = DEFAULT_ROOT_TEXT)]
    root_text: String,
    #[command(flatten)]
    vocab: VocabArgs,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("scorer").required(true).args(["model", "scores"])))]
struct ParseArgs {
    corpus: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Line-delimited score tensor records.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Decoder: greedy for chronological, Chu-Liu-Edmonds for general.
    /// Defaults to the score tensors' own mode.
    #[arg(long, value_parser = ["chronological", "general"])]
    mode: Option<String>,
    #[command(flatten)]
    vocab: VocabArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    predictions: PathBuf,
    gold: PathBuf,
    #[arg(long)]
    include_root_edges: bool,
    /// Write the full report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for SVG charts of the length and relation breakdowns.
    #[arg(long)]
    emit_charts: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = VerifyConfig::default().seed)]
    seed: u64,
    /// Random instances per configuration.
    #[arg(long, default_value_t = VerifyConfig::default().instances)]
    instances: usize,
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_USAGE;
        }
        builder = builder.num_threads(jobs);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_DATA
            }
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Train(a) => train_cmd(a),
        Command::Parse(a) => parse_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn file_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_owned(),
        source,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(file_error(path))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path).map(BufReader::new).map_err(file_error(path))
}

fn write_file(path: &Path, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    fs::write(path, buf).map_err(file_error(path))
}

fn load_options(vocab: &VocabArgs) -> Result<LoadOptions> {
    Ok(LoadOptions {
        vocab: vocab
            .relations
            .as_deref()
            .map(|p| RelationVocab::from_lines(&read(p)?))
            .transpose()?,
        root_label: vocab.root_label.clone(),
    })
}

fn ingest(args: IngestArgs) -> Result<i32> {
    let format: SourceFormat = args.format.parse()?;
    let (corpus, report) = parse_corpus(&read(&args.input)?, format, &load_options(&args.vocab)?)?;
    let (_, tree_report) = corpus.treeified();
    let stats = format!(
        "dialogues {}  edges {}  backward links dropped {}\n\
         treeify: discarded {} of {} edges ({:.2}%), {} root attachments\n",
        report.dialogues,
        report.edges,
        report.backward_dropped,
        tree_report.discarded,
        tree_report.input_edges,
        100.0 * tree_report.discard_fraction(),
        tree_report.root_attached
    );
    match &args.output {
        Some(path) => {
            write_file(path, |b| corpus.write_canonical(b))?;
            print!("{stats}");
        }
        None => {
            corpus.write_canonical(std::io::stdout().lock())?;
            eprint!("{stats}");
        }
    }
    Ok(EXIT_OK)
}

fn train_cmd(args: TrainArgs) -> Result<i32> {
    let mut config = match &args.config {
        Some(p) => TrainConfig::from_toml(&read(p)?)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let (corpus, _) = parse_corpus(
        &read(&args.corpus)?,
        SourceFormat::Canonical,
        &load_options(&args.vocab)?,
    )?;
    let (pairs, report) = corpus.treeified();
    let space = FeatureSpace::from_corpus(&corpus.dialogues, &args.root_text);
    println!(
        "training on {} dialogues, {} features x {} labels, discarded {} of {} gold edges",
        pairs.len(),
        space.len(),
        corpus.labels.num_labels(),
        report.discarded,
        report.input_edges
    );
    let outcome = train(LinearScorerModel::zeros(space, corpus.labels.clone()), &pairs, &config)?;
    for s in &outcome.trace {
        println!(
            "epoch {:>3}  objective {:.6}  mean nll {:.6}",
            s.epoch, s.objective, s.mean_nll
        );
    }
    write_file(&args.output, |b| outcome.model.save(b))?;
    if let Some(trace) = &args.trace {
        write_file(trace, |b| write_trace(b, &outcome.trace))?;
    }
    Ok(EXIT_OK)
}

/// Label set described by score-record relation names. A trailing
/// `<root>` marks the reserved root; otherwise `root_label` must name one.
fn labels_from_record_names(names: &[String], root_label: Option<&str>) -> Result<LabelSet> {
    match names.split_last() {
        Some((last, rest)) if last == RESERVED_ROOT_LABEL => Ok(LabelSet::reserved(RelationVocab::new(rest.to_vec())?)),
        _ => {
            let root = root_label
                .ok_or_else(|| Error::Config("score records have no <root> label; pass --root-label".into()))?;
            LabelSet::with_root_label(RelationVocab::new(names.to_vec())?, root)
        }
    }
}

/// Loads a corpus under a scorer's labels. Labels the scorer does not know
/// are reported with both vocabularies.
fn corpus_for(labels: &LabelSet, text: &str) -> Result<Corpus> {
    let options = LoadOptions {
        vocab: Some(labels.vocab().clone()),
        root_label: (!labels.has_reserved_root())
            .then(|| labels.label(labels.root_id()).unwrap_or_default().to_owned()),
    };
    match parse_corpus(text, SourceFormat::Canonical, &options) {
        Err(Error::UnknownRelations(_)) => {
            let found = parse_corpus(text, SourceFormat::Canonical, &LoadOptions::default())?
                .0
                .labels
                .names();
            Err(Error::VocabularyMismatch {
                expected: labels.names(),
                found,
            })
        }
        other => other.map(|(c, _)| c),
    }
}

fn parse_cmd(args: ParseArgs) -> Result<i32> {
    let text = read(&args.corpus)?;
    let mode: Option<Mode> = args.mode.as_deref().map(str::parse).transpose()?;
    let scorer: Box<dyn EdgeScorer> = if let Some(path) = &args.model {
        Box::new(LinearScorerModel::load(open(path)?)?)
    } else {
        let path = args.scores.as_ref().expect("clap enforces one scorer");
        let records = read_score_records(open(path)?)?;
        let labels = match records.iter().find_map(|r| r.labels.as_ref()) {
            Some(names) => labels_from_record_names(names, args.vocab.root_label.as_deref())?,
            None => {
                parse_corpus(&text, SourceFormat::Canonical, &load_options(&args.vocab)?)?
                    .0
                    .labels
            }
        };
        Box::new(ImportedScores::new(labels, &records)?)
    };
    let corpus = corpus_for(scorer.labels(), &text)?;
    let parses = parse_dialogues(scorer.as_ref(), &corpus.dialogues, mode)?;
    let records: Vec<PredictionRecord> = parses
        .iter()
        .map(|p| PredictionRecord::from_tree(&p.id, &p.tree, scorer.labels(), Some(p.log_prob)))
        .collect();
    match &args.output {
        Some(path) => {
            write_file(path, |b| write_predictions(b, &records))?;
            println!("parsed {} dialogues", records.len());
        }
        None => write_predictions(std::io::stdout().lock(), &records)?,
    }
    Ok(EXIT_OK)
}

fn eval_cmd(args: EvalArgs) -> Result<i32> {
    let gold = load_tree_bank(&read(&args.gold)?, None)?;
    let preds = load_tree_bank(&read(&args.predictions)?, None)?;
    let (preds, gold) = align_tree_banks(&preds, &gold)?;
    let config = EvalConfig {
        include_root_edges: args.include_root_edges,
        ..Default::default()
    };
    let report = evaluate(&preds.trees, &gold.trees, &gold.labels, &config)?;
    print!("{}", report.render_table());
    if let Some(path) = &args.out {
        write_file(path, |b| {
            serde_json::to_writer_pretty(&mut *b, &report)?;
            b.push(b'\n');
            Ok(())
        })?;
    }
    if let Some(dir) = &args.emit_charts {
        fs::create_dir_all(dir).map_err(file_error(dir))?;
        let length = dir.join("length_breakdown.svg");
        let relation = dir.join("relation_breakdown.svg");
        for (path, svg) in [
            (&length, report.length_chart_svg()),
            (&relation, report.relation_chart_svg()),
        ] {
            write_file(path, |b| {
                b.extend_from_slice(svg.as_bytes());
                Ok(())
            })?;
        }
        println!("charts written to {} and {}", length.display(), relation.display());
    }
    Ok(EXIT_OK)
}

fn verify_cmd(args: VerifyArgs) -> Result<i32> {
    let reports = run_all(&VerifyConfig {
        seed: args.seed,
        instances: args.instances,
    });
    let mut out = std::io::stdout().lock();
    for r in &reports {
        writeln!(out, "{}", r.summary())?;
    }
    Ok(if reports.iter().all(|r| r.passed()) {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    })
}
