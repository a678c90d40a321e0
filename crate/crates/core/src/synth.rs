//! Synthetic corpora and random score tensors.
//!
//! A planted corpus is drawn from a fixed linear model over the full feature
//! space (see [`planted_model`]). Utterances are sampled first, then each dialogue's gold
//! tree is the planted model's argmax. Dialogues where some node's best
//! attachment beats the runner-up by less than `margin` are rejected and
//! resampled, so the gold trees are learnable by the same model family.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::decoder::decode_greedy;
use crate::error::{Error, Result};
use crate::scorer::{score_dialogue, Feature, FeatureSpace, LinearScorerModel, DEFAULT_ROOT_TEXT};
use crate::types::{Dialogue, LabelSet, Mode, RelationVocab, ScoreTensor};

pub const PLANTED_RELATIONS: [&str; 5] = [
    "Comment",
    "Question_answer_pair",
    "Acknowledgement",
    "Elaboration",
    "Continuation",
];

const SPEAKERS: [&str; 3] = ["amy", "ben", "cat"];

const CONTENT_WORDS: [&str; 24] = [
    "wheat", "ore", "sheep", "wood", "clay", "trade", "road", "city", "port", "robber", "dice", "card", "knight",
    "army", "build", "offer", "deal", "bank", "turn", "point", "settle", "swap", "harbor", "longest",
];

const FUNCTION_WORDS: [&str; 8] = ["i", "you", "the", "a", "for", "to", "it", "have"];

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedConfig {
    pub train_dialogues: usize,
    pub heldout_dialogues: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Required gap between each node's best and second-best attachment.
    pub margin: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            train_dialogues: 400,
            heldout_dialogues: 100,
            min_len: 3,
            max_len: 8,
            margin: 0.5,
            seed: 20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlantedCorpus {
    pub model: LinearScorerModel,
    pub train: Corpus,
    pub heldout: Corpus,
    /// Dialogues sampled, including rejected ones.
    pub attempts: usize,
}

/// Every feature template the featurizer can emit.
pub fn full_feature_space(root_text: &str) -> FeatureSpace {
    let mut all = vec![
        Feature::Bias,
        Feature::SameSpeaker,
        Feature::DependentQuestion,
        Feature::HeadIsRoot,
    ];
    all.extend((1..=5).map(Feature::Distance));
    all.extend((0..=3).map(Feature::Overlap));
    FeatureSpace::new(all, root_text)
}

pub fn planted_labels() -> LabelSet {
    LabelSet::reserved(RelationVocab::new(PLANTED_RELATIONS).expect("distinct labels"))
}

/// Base planted weights per feature, in label order
/// `[Comment, QAP, Acknowledgement, Elaboration, Continuation, <root>]`.
const PLANTED_TABLE: [(Feature, [f64; 6]); 13] = [
    (Feature::Bias, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
    (Feature::Distance(1), [1.5, 1.5, 2.5, 1.5, 0.0, 0.0]),
    (Feature::Distance(2), [0.5, 0.8, -1.0, 0.3, -0.5, 0.0]),
    (Feature::Distance(3), [-0.5, 0.0, -2.0, -0.5, -1.0, 0.0]),
    (Feature::Distance(4), [-1.5, -1.0, -3.0, -1.5, -2.0, 0.0]),
    (Feature::Distance(5), [-2.5, -2.0, -4.0, -2.5, -3.0, 0.0]),
    (Feature::SameSpeaker, [-0.5, -2.0, -2.0, 1.5, 3.0, 0.0]),
    (Feature::Overlap(0), [0.5, -1.0, 0.3, -1.0, 0.5, 0.0]),
    (Feature::Overlap(1), [1.2, 2.0, -1.0, 0.8, 0.0, 0.0]),
    (Feature::Overlap(2), [1.5, 2.5, -2.0, 2.0, 0.0, 0.0]),
    (Feature::Overlap(3), [2.5, 3.5, -3.0, 3.0, 0.0, 0.0]),
    (Feature::DependentQuestion, [1.5, -2.5, -1.5, 0.0, -0.5, 2.5]),
    (Feature::HeadIsRoot, [0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
];

/// The planted linear model: base weights favouring nearby heads, answers
/// and acknowledgements across speakers, continuations and elaborations
/// within a speaker, and questions opening new threads.
pub fn planted_model() -> LinearScorerModel {
    let space = full_feature_space(DEFAULT_ROOT_TEXT);
    let mut model = LinearScorerModel::zeros(space.clone(), planted_labels());
    for (feature, row) in PLANTED_TABLE {
        let f = space.id(feature).expect("full space has every feature");
        for (r, w) in row.iter().enumerate() {
            let i = model.weight_index(f, r);
            model.weights_mut()[i] = *w;
        }
    }
    model
}

/// Linear model with uniform random weights.
pub fn random_model(space: FeatureSpace, labels: LabelSet, scale: f64, rng: &mut impl Rng) -> LinearScorerModel {
    let mut model = LinearScorerModel::zeros(space, labels);
    for w in model.weights_mut() {
        *w = rng.random_range(-scale..=scale);
    }
    model
}

/// Edgeless dialogue with random speakers and short token-bag utterances.
pub fn random_dialogue(id: &str, n: usize, rng: &mut impl Rng) -> Dialogue {
    let utterances: Vec<(Option<String>, String)> = (0..n)
        .map(|_| {
            let speaker = SPEAKERS.choose(rng).map(|s| s.to_string());
            let len = rng.random_range(2..=4);
            let mut words: Vec<&str> = CONTENT_WORDS.choose_multiple(rng, len).copied().collect();
            words.insert(0, FUNCTION_WORDS.choose(rng).copied().unwrap_or("i"));
            let mut text = words.join(" ");
            text.push(if rng.random_bool(0.3) { '?' } else { '.' });
            (speaker, text)
        })
        .collect();
    Dialogue::from_texts(id, utterances, Vec::new()).expect("generated dialogue is well-formed")
}

/// Random tensor with every mode-permitted cell drawn from
/// `[-scale, scale]`.
pub fn random_score_tensor(n: usize, num_relations: usize, mode: Mode, scale: f64, rng: &mut impl Rng) -> ScoreTensor {
    ScoreTensor::from_fn(n, num_relations, mode, |_, _, _| rng.random_range(-scale..=scale)).expect("finite scores")
}

/// Smallest gap, over nodes, between the best and second-best permitted
/// `(head, relation)` score. Infinite when every node has one candidate.
pub fn min_attachment_margin(theta: &ScoreTensor) -> f64 {
    (1..=theta.n())
        .map(|m| {
            let (mut best, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for (_, _, s) in theta.incoming(m) {
                if s > best {
                    second = best;
                    best = s;
                } else if s > second {
                    second = s;
                }
            }
            best - second
        })
        .fold(f64::INFINITY, f64::min)
}

/// Samples a planted corpus. Identical configs give identical corpora.
pub fn generate_planted(config: &PlantedConfig) -> Result<PlantedCorpus> {
    if config.min_len == 0 || config.min_len > config.max_len {
        return Err(Error::Config("need 1 <= min_len <= max_len".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let labels = planted_labels();
    let model = planted_model();
    let total = config.train_dialogues + config.heldout_dialogues;
    let mut dialogues = Vec::with_capacity(total);
    let mut attempts = 0;
    while dialogues.len() < total {
        attempts += 1;
        if attempts > 1000 * total.max(1) {
            return Err(Error::Config(format!(
                "margin {} rejected too many dialogues",
                config.margin
            )));
        }
        let n = rng.random_range(config.min_len..=config.max_len);
        let id = format!("planted-{:04}", dialogues.len() + 1);
        let bare = random_dialogue(&id, n, &mut rng);
        let theta = score_dialogue(&model, &bare)?;
        if min_attachment_margin(&theta) < config.margin {
            continue;
        }
        let tree = decode_greedy(&theta)?;
        let edges = tree.edges().iter().filter(|e| e.head > 0).copied().collect();
        dialogues.push(bare.with_edges(edges)?);
    }
    let heldout = dialogues.split_off(config.train_dialogues);
    Ok(PlantedCorpus {
        model,
        train: Corpus {
            labels: labels.clone(),
            dialogues,
        },
        heldout: Corpus {
            labels,
            dialogues: heldout,
        },
        attempts,
    })
}
