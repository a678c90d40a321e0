mod common;

use std::collections::BTreeMap;

use discotree::corpus::{
    parse_corpus, parse_predictions, write_predictions, Corpus, LoadOptions, PredictionRecord, SourceFormat,
};
use discotree::scorer::{import_score_tensor, score_dialogue, ScoreRecord, DEFAULT_ROOT_TEXT};
use discotree::synth::{full_feature_space, planted_labels, random_dialogue, random_model, random_score_tensor};
use discotree::verify::random_gold_tree;
use discotree::{
    decode_tree, evaluate, treeify, validate_tree, Dialogue, DiscoursePair, EvalConfig, LabelSet, Mode, RelationVocab,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const R: usize = 4;

fn labels() -> LabelSet {
    LabelSet::reserved(RelationVocab::new(["a", "b", "c", "d"]).unwrap())
}

/// A dialogue with an arbitrary forward-pointing edge multiset, root edges included.
fn graph_dialogue(min_head: usize) -> impl Strategy<Value = Dialogue> {
    (1usize..=9).prop_flat_map(move |n| {
        prop::collection::vec((0..=n, 0..=n, 0..R), 0..=2 * n).prop_map(move |raw| {
            let edges = raw
                .into_iter()
                .filter_map(|(a, b, r)| {
                    let (h, m) = (a.min(b), a.max(b));
                    (h >= min_head && h < m).then(|| DiscoursePair::new(h, m, r))
                })
                .collect();
            let texts = (0..n).map(|i| (Some(format!("s{}", i % 3)), format!("word{} common", i % 4)));
            Dialogue::from_texts("g", texts, edges).unwrap()
        })
    })
}

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Chronological), Just(Mode::General)]
}

proptest! {
    #[test]
    fn treeify_gives_a_valid_tree_and_is_idempotent(d in graph_dialogue(0)) {
        let root = labels().root_id();
        let (tree, report) = treeify(&d, root);
        prop_assert!(validate_tree(&tree).is_ok());
        prop_assert_eq!(tree.edges().len(), d.len());
        prop_assert_eq!(report.input_edges, d.gold_edges().len());
        prop_assert_eq!(report.discarded + d.len() - report.root_attached, report.input_edges);

        let again = d.with_edges(tree.edges().to_vec()).unwrap();
        let (tree2, report2) = treeify(&again, root);
        prop_assert_eq!(&tree2, &tree);
        prop_assert_eq!(report2.discarded, 0);
    }

    #[test]
    fn decoded_trees_are_valid(seed in any::<u64>(), n in 1usize..=7, r in 1usize..=3, mode in mode()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = random_score_tensor(n, r, mode, 5.0, &mut rng);
        let tree = decode_tree(&theta).unwrap();
        prop_assert!(validate_tree(&tree).is_ok());
        prop_assert_eq!(tree.n(), n);
        for e in tree.edges() {
            prop_assert!(theta.get(e.head, e.dependent, e.relation).is_some());
        }
    }

    #[test]
    fn las_never_exceeds_uas(seed in any::<u64>(), sizes in prop::collection::vec(1usize..=12, 1..6), include_root_edges in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = labels();
        let mut gold = BTreeMap::new();
        let mut pred = BTreeMap::new();
        for (i, &n) in sizes.iter().enumerate() {
            gold.insert(format!("d{i}"), random_gold_tree(n, &labels, &mut rng));
            pred.insert(format!("d{i}"), random_gold_tree(n, &labels, &mut rng));
        }
        let config = EvalConfig { include_root_edges, ..Default::default() };
        let report = evaluate(&pred, &gold, &labels, &config).unwrap();
        prop_assert!(report.las <= report.uas);
        prop_assert!((0.0..=1.0).contains(&report.uas));
    }

    #[test]
    fn with_root_edges_micro_f1_is_attachment_accuracy(seed in any::<u64>(), sizes in prop::collection::vec(1usize..=12, 1..6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = labels();
        let mut gold = BTreeMap::new();
        let mut pred = BTreeMap::new();
        let (mut heads, mut both, mut total) = (0, 0, 0);
        for (i, &n) in sizes.iter().enumerate() {
            let g = random_gold_tree(n, &labels, &mut rng);
            let p = random_gold_tree(n, &labels, &mut rng);
            for m in 1..=n {
                let (ge, pe) = (g.edge_of(m).unwrap(), p.edge_of(m).unwrap());
                heads += usize::from(ge.head == pe.head);
                both += usize::from(ge == pe);
                total += 1;
            }
            gold.insert(format!("d{i}"), g);
            pred.insert(format!("d{i}"), p);
        }
        let config = EvalConfig { include_root_edges: true, ..Default::default() };
        let report = evaluate(&pred, &gold, &labels, &config).unwrap();
        prop_assert!((report.uas - heads as f64 / total as f64).abs() < 1e-12);
        prop_assert!((report.las - both as f64 / total as f64).abs() < 1e-12);
    }

    #[test]
    fn scores_are_linear_in_the_weights(seed in any::<u64>(), n in 1usize..=6, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = full_feature_space(DEFAULT_ROOT_TEXT);
        let x = random_model(space.clone(), planted_labels(), 1.0, &mut rng);
        let y = random_model(space, planted_labels(), 1.0, &mut rng);
        let mut combo = x.clone();
        for (w, (wx, wy)) in combo.weights_mut().iter_mut().zip(x.weights().iter().zip(y.weights())) {
            *w = a * wx + b * wy;
        }
        let d = random_dialogue("lin", n, &mut rng);
        let (tx, ty, tc) = (
            score_dialogue(&x, &d).unwrap(),
            score_dialogue(&y, &d).unwrap(),
            score_dialogue(&combo, &d).unwrap(),
        );
        prop_assert_eq!(tc.mask(), tx.mask());
        for ((c, x), y) in tc.values().iter().zip(tx.values()).zip(ty.values()) {
            prop_assert!((c - (a * x + b * y)).abs() < 1e-9);
        }
    }

    #[test]
    fn gold_edges_do_not_change_scores(d in graph_dialogue(0), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(full_feature_space(DEFAULT_ROOT_TEXT), labels(), 1.0, &mut rng);
        let bare = d.with_edges(Vec::new()).unwrap();
        prop_assert_eq!(score_dialogue(&model, &d).unwrap(), score_dialogue(&model, &bare).unwrap());
    }

    #[test]
    fn canonical_corpus_round_trips(dialogues in prop::collection::vec(graph_dialogue(1), 1..4)) {
        let dialogues: Vec<Dialogue> = dialogues
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let texts = d.utterances().iter().map(|u| (u.speaker.clone(), u.text.clone()));
                Dialogue::from_texts(format!("d{i}"), texts, d.gold_edges().to_vec()).unwrap()
            })
            .collect();
        let corpus = Corpus { labels: labels(), dialogues };
        let mut buf = Vec::new();
        corpus.write_canonical(&mut buf).unwrap();
        let (back, report) = parse_corpus(std::str::from_utf8(&buf).unwrap(), SourceFormat::Canonical, &LoadOptions::default()).unwrap();
        prop_assert_eq!(report.backward_dropped, 0);
        prop_assert_eq!(back, corpus);
    }

    #[test]
    fn score_records_round_trip(seed in any::<u64>(), n in 1usize..=6, r in 1usize..=3, mode in mode()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = random_score_tensor(n, r, mode, 3.0, &mut rng);
        let record = ScoreRecord::from_tensor("t", &theta, None);
        let json = serde_json::to_string(&record).unwrap();
        let back: ScoreRecord = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(import_score_tensor(&back).unwrap(), theta);
    }

    #[test]
    fn prediction_records_round_trip(seed in any::<u64>(), n in 1usize..=10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = labels();
        let tree = random_gold_tree(n, &labels, &mut rng);
        let record = PredictionRecord::from_tree("p", &tree, &labels, Some(-1.25));
        let mut buf = Vec::new();
        write_predictions(&mut buf, [&record]).unwrap();
        let back = parse_predictions(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(&back, &vec![record]);
        prop_assert_eq!(back[0].to_tree(&labels).unwrap(), tree);
    }
}

#[test]
fn marginals_sum_to_one_per_dependent() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for mode in [Mode::Chronological, Mode::General] {
        let theta = random_score_tensor(5, 3, mode, 4.0, &mut rng);
        let mu = discotree::marginals(&theta).unwrap();
        for m in 1..=5 {
            assert!((mu.incoming_mass(m) - 1.0).abs() < 1e-12);
        }
        let brute = common::brute_force(&theta);
        let lz = discotree::log_partition(&theta).unwrap().log_z;
        assert!((lz - brute.log_z).abs() < 1e-10);
    }
}
