mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::data_dir;

fn discotree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_discotree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture(name: &str) -> String {
    data_dir().join("fixtures").join(name).to_str().unwrap().to_owned()
}

#[test]
fn ingest_reports_treeify_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stac.jsonl");
    let o = discotree(&["ingest", &fixture("stac_mini.json"), "--format", "stac", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("dialogues 12"), "{text}");
    assert!(text.contains("discarded 6 of 109 edges (5.50%)"), "{text}");

    let again = dir.path().join("again.jsonl");
    let o = discotree(&["ingest", s(&out), "-o", s(&again)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn train_parse_eval_on_the_planted_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let planted = data_dir().join("planted");
    let (train, heldout) = (planted.join("train.jsonl"), planted.join("heldout.jsonl"));
    let model = dir.path().join("model.json");
    let model2 = dir.path().join("model2.json");
    let trace = dir.path().join("trace.csv");

    let o = discotree(&["train", s(&train), "-o", s(&model), "--trace", s(&trace), "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 21);
    let o = discotree(&["--jobs", "2", "train", s(&train), "-o", s(&model2), "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&model2).unwrap());

    let pred = dir.path().join("pred.jsonl");
    let o = discotree(&["parse", s(&heldout), "--model", s(&model), "-o", s(&pred)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let report = dir.path().join("report.json");
    let charts = dir.path().join("charts");
    let o = discotree(&[
        "eval",
        s(&pred),
        s(&heldout),
        "--out",
        s(&report),
        "--emit-charts",
        s(&charts),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json["las"].as_f64().unwrap() >= 0.95, "{json}");
    for chart in ["length_breakdown.svg", "relation_breakdown.svg"] {
        let svg = std::fs::read_to_string(charts.join(chart)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}

#[test]
fn eval_matches_the_hand_tally() {
    let o = discotree(&["eval", &fixture("eval_pred.jsonl"), &fixture("eval_gold.jsonl")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("UAS  66.67") && text.contains("LAS  44.44"), "{text}");

    let o = discotree(&[
        "eval",
        &fixture("eval_pred.jsonl"),
        &fixture("eval_gold.jsonl"),
        "--include-root-edges",
    ]);
    let text = stdout(&o);
    assert!(text.contains("UAS  71.43") && text.contains("LAS  57.14"), "{text}");
}

#[test]
fn imported_scores_decode_to_the_expected_trees() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.jsonl");
    let o = discotree(&[
        "parse",
        &fixture("scores_corpus.jsonl"),
        "--scores",
        &fixture("scores_mini.jsonl"),
        "-o",
        s(&pred),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = discotree(&[
        "eval",
        s(&pred),
        &fixture("scores_expected.jsonl"),
        "--include-root-edges",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("UAS 100.00") && text.contains("LAS 100.00"), "{text}");
}

#[test]
fn unknown_relation_names_both_vocabularies() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let tiny = dir.path().join("tiny.jsonl");
    std::fs::write(
        &tiny,
        "{\"id\":\"x\",\"edus\":[{\"speaker\":\"a\",\"text\":\"hi\"},{\"speaker\":\"b\",\"text\":\"yo\"}],\
         \"relations\":[{\"x\":0,\"y\":1,\"type\":\"Narration\"}]}\n",
    )
    .unwrap();
    let train = data_dir().join("planted/train.jsonl");
    let config = dir.path().join("fast.toml");
    std::fs::write(&config, "epochs = 1\n").unwrap();
    let o = discotree(&["train", s(&train), "--config", s(&config), "-o", s(&model)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = discotree(&["parse", s(&tiny), "--model", s(&model)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("Narration") && err.contains("Continuation"), "{err}");
}

#[test]
fn exit_codes() {
    assert_eq!(discotree(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(discotree(&["parse", "x.jsonl"]).status.code(), Some(1));
    assert_eq!(discotree(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let o = discotree(&["ingest", s(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.jsonl"));

    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(discotree(&["ingest", s(&empty)]).status.code(), Some(2));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{not json\n").unwrap();
    let o = discotree(&["ingest", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn verify_passes() {
    let o = discotree(&["verify", "--instances", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 6);
}
