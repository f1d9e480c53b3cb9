//! Deterministic synthetic corpus for exercising the full pipeline.
//!
//! The generator builds a benign/harmful prompt corpus around the toy
//! encoder so that the downstream behaviours are separable by construction:
//!
//! * Benign prompts draw only from a curated vocabulary of short words, so
//!   every benign token is a single subword and pooled vectors stay close to
//!   the origin. Training lengths are mixed (2–10 words): the short prompts
//!   have the largest pooled norms and pin the learned radius high enough to
//!   cover any sanitizer output, which is itself a short benign remnant.
//! * Harmful prompts add one lexicon word. "Strong" lexicon words are long
//!   (five subwords, each carrying the full offset) and push the embedding
//!   far outside the benign radius; "mild" ones are single-subword words
//!   that land near the boundary and only appear in the validation split,
//!   giving the nu sweep an interior F1 optimum.
//! * The thesaurus and the mock LLM rewrite table split the strong lexicon
//!   between them: even-indexed strong words get two mid-ranked antonyms
//!   (mild words chosen by alignment between saturated tanh patterns) and no
//!   rewrite; odd-indexed words get no antonyms but a best-aligned rewrite.
//!   A thesaurus-first sanitizer therefore removes the uncovered words
//!   unless its LLM stage is enabled, and replacing preserves progressively
//!   more of the original direction, so mean similarity orders
//!   removal < thesaurus < thesaurus+LLM while every strategy still
//!   neutralizes every fixture prompt.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::DatasetRecord;
use crate::encoder::{token_inputs, tokenize, ToyEncoderParams};
use crate::geometry::euclidean_norm;

/// Corpus RNG seed; the encoder keeps its own seed inside the parameters.
pub const DEFAULT_FIXTURE_SEED: u64 = 7;

/// Offset magnitude for lexicon words in the fixture encoder.
pub const FIXTURE_LEXICON_OFFSET: f64 = 8.0;

/// Sizing and seeding for the generated corpus.
#[derive(Debug, Clone)]
pub struct FixtureConfig {
    pub seed: u64,
    pub n_train: usize,
    pub n_val_benign: usize,
    pub n_val_strong: usize,
    pub n_val_mild: usize,
    pub n_test_pairs: usize,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_FIXTURE_SEED,
            n_train: 2000,
            n_val_benign: 250,
            n_val_strong: 125,
            n_val_mild: 125,
            n_test_pairs: 250,
        }
    }
}

/// Everything the pipeline needs: encoder parameters (with the lexicon),
/// dataset splits, sanitizer tables and the concept words used by the
/// embedding-arithmetic attack.
#[derive(Debug, Clone)]
pub struct FixtureBundle {
    pub params: ToyEncoderParams,
    /// Benign-only training split (label 0).
    pub train: Vec<DatasetRecord>,
    /// Mixed validation split: benign, strong harmful, mild harmful.
    pub val: Vec<DatasetRecord>,
    /// Paired test split; each pair shares `pair_id`.
    pub test: Vec<DatasetRecord>,
    /// Strong lexicon word -> candidate antonyms (mild lexicon words).
    /// Covers only the even-indexed strong words; the rest miss the
    /// thesaurus and fall through to removal or the LLM stage.
    pub thesaurus: BTreeMap<String, Vec<String>>,
    /// Strong lexicon word -> single-word rewrite used by the mock LLM.
    /// Covers exactly the strong words the thesaurus misses.
    pub llm_rewrites: BTreeMap<String, String>,
    pub strong_words: Vec<String>,
    pub mild_words: Vec<String>,
    /// Far-from-origin concept injected by the embedding attack.
    pub far_concept: String,
    /// Near-origin concept subtracted by the embedding attack.
    pub neutral_concept: String,
}

/// Short benign vocabulary; every word is a single subword token.
pub const BENIGN_VOCAB: &[&str] = &[
    "acre", "aged", "ally", "arch", "area", "army", "atom", "aunt", "axis", "baby",
    "back", "bake", "bald", "ball", "band", "bank", "barn", "base", "bath", "bead",
    "beam", "bean", "bear", "beat", "bell", "belt", "bend", "bike", "bird", "bite",
    "blue", "boat", "bold", "bone", "book", "boot", "bowl", "bulb", "bulk", "bull",
    "bush", "cafe", "cake", "calf", "calm", "camp", "cane", "cape", "card", "care",
    "cart", "case", "cash", "cast", "cave", "cell", "chef", "chin", "chip", "city",
    "clay", "clip", "club", "coal", "coat", "code", "coin", "cold", "colt", "comb",
    "cone", "cook", "cool", "cord", "cork", "corn", "cost", "cozy", "crab", "crew",
    "crop", "cube", "curb", "cure", "curl", "damp", "dark", "dart", "dawn", "deck",
    "deed", "deep", "deer", "dent", "desk", "dial", "dice", "diet", "dirt", "dish",
    "dock", "doll", "dome", "door", "dose", "dove", "down", "drum", "duck", "dune",
    "dusk", "dust", "duty", "each", "earl", "east", "easy", "echo", "edge", "envy",
    "epic", "even", "exam", "exit", "face", "fact", "fair", "fall", "farm", "fast",
    "fate", "fawn", "feat", "fern", "film", "fine", "firm", "fish", "flag", "flat",
    "flax", "foam", "fold", "folk", "food", "foot", "fork", "fort", "fowl", "frog",
    "fuel", "full", "fund", "gate", "gear", "gift", "glen", "glow", "goat", "gold",
];

/// Invented single-token lexicon words near the decision boundary; used in
/// the validation split and as sanitizer replacement candidates.
pub const MILD_LEXICON: &[&str] = &[
    "zorv", "qeft", "blyx", "vexl", "gorr", "nyth", "drex", "kuld", "morv", "zilk",
    "qurt", "pyrn", "fosk", "julb", "brax", "cryl", "dovk", "elzt", "frub", "gnax",
    "hylm", "irkz", "jemb", "krev", "lurn", "mosk", "nubd", "orvx", "plim", "quzd",
    "rysk", "snev", "tulb", "urft", "vonk", "wrex", "xalb", "ybra", "zemp", "qopt",
    "dryl", "felz", "gurm", "hosk", "jyrn", "kelb", "lymp", "norv",
];

/// Invented long lexicon words; each tokenizes into five subwords and every
/// subword carries the full lexicon offset, so these dominate the pooled
/// embedding.
pub const STRONG_LEXICON: &[&str] = &[
    "slaughterstormfang",
    "bloodravagemachine",
    "gorefountainstrike",
    "carnagewhirlblades",
    "venomslickgarrotte",
    "marrowgrindertotem",
    "cleaverfrenzyhowls",
    "scorchflayerengine",
    "throatripperlegion",
    "skullsplintercurse",
    "viscerastormtides",
    "painharvestloomery",
];

/// Encoder parameters for the fixture: default curvature/seed, saturating
/// lexicon offset, and the full strong+mild lexicon installed.
pub fn fixture_encoder_params() -> ToyEncoderParams {
    let mut params = ToyEncoderParams {
        lexicon_offset: FIXTURE_LEXICON_OFFSET,
        ..Default::default()
    };
    for w in STRONG_LEXICON.iter().chain(MILD_LEXICON.iter()) {
        params.harmful_lexicon.insert((*w).to_string());
    }
    params
}

/// Builds the corpus with default sizing and seed.
pub fn build_default_corpus() -> FixtureBundle {
    build_corpus(&FixtureConfig::default())
}

/// Builds the corpus. Deterministic in `config.seed`.
pub fn build_corpus(config: &FixtureConfig) -> FixtureBundle {
    let params = fixture_encoder_params();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let train = (0..config.n_train)
        .map(|i| {
            let len = train_length(&mut rng);
            DatasetRecord {
                id: format!("train-{i:04}"),
                text: benign_prompt(&mut rng, len),
                label: Some(0),
                pair_id: None,
            }
        })
        .collect();

    let mut val = Vec::new();
    for i in 0..config.n_val_benign {
        val.push(DatasetRecord {
            id: format!("val-benign-{i:04}"),
            text: benign_prompt(&mut rng, 8),
            label: Some(0),
            pair_id: None,
        });
    }
    for i in 0..config.n_val_strong {
        let word = STRONG_LEXICON[i % STRONG_LEXICON.len()];
        val.push(DatasetRecord {
            id: format!("val-strong-{i:04}"),
            text: harmful_prompt(&mut rng, 4, word),
            label: Some(1),
            pair_id: None,
        });
    }
    for i in 0..config.n_val_mild {
        let word = MILD_LEXICON[i % MILD_LEXICON.len()];
        val.push(DatasetRecord {
            id: format!("val-mild-{i:04}"),
            text: harmful_prompt(&mut rng, 6, word),
            label: Some(1),
            pair_id: None,
        });
    }

    let (thesaurus, llm_rewrites) = build_replacement_tables(&params);

    let mut test = Vec::new();
    for i in 0..config.n_test_pairs {
        let pair_id = format!("pair-{i:04}");
        let word = STRONG_LEXICON[i % STRONG_LEXICON.len()];
        // Reject benign contexts whose sanitized variants (word removed or
        // replaced) would not sit comfortably inside the benign region, or
        // whose harmful composite is not comfortably outside it; this keeps
        // every detection and sanitizer outcome decidable by construction.
        let (shared, harmful_text) = loop {
            let candidate = sample_words(&mut rng, 4);
            let harmful = insert_word(&mut rng, &candidate, word);
            if prompt_distance(&harmful, &params) >= HARMFUL_DISTANCE_FLOOR
                && sanitized_variants_are_cool(&candidate, word, &params, &thesaurus, &llm_rewrites)
            {
                break (candidate, harmful);
            }
        };
        let mut safe_words = shared.clone();
        safe_words.extend(sample_words(&mut rng, 4));
        test.push(DatasetRecord {
            id: format!("test-{i:04}-safe"),
            text: safe_words.join(" "),
            label: Some(0),
            pair_id: Some(pair_id.clone()),
        });
        test.push(DatasetRecord {
            id: format!("test-{i:04}-harm"),
            text: harmful_text,
            label: Some(1),
            pair_id: Some(pair_id),
        });
    }

    FixtureBundle {
        params,
        train,
        val,
        test,
        thesaurus,
        llm_rewrites,
        strong_words: STRONG_LEXICON.iter().map(|s| s.to_string()).collect(),
        mild_words: MILD_LEXICON.iter().map(|s| s.to_string()).collect(),
        far_concept: STRONG_LEXICON[0].to_string(),
        // A full-length benign phrase: single words pool to large norms, but
        // the subtracted concept must itself sit near the origin.
        neutral_concept: BENIGN_VOCAB[..8].join(" "),
    }
}

/// Training prompt length: mostly 6–10 words, with a deliberate tail of very
/// short prompts whose pooled norms set the radius high enough to cover
/// sanitizer outputs (4–6 word benign remnants).
fn train_length(rng: &mut ChaCha8Rng) -> usize {
    match rng.gen_range(0..100u32) {
        0..=11 => 2,
        12..=18 => 3,
        19..=22 => 4,
        23..=26 => 5,
        27..=41 => 6,
        42..=56 => 7,
        57..=83 => 8,
        84..=91 => 9,
        _ => 10,
    }
}

/// Samples `n` distinct benign words.
fn sample_words(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    assert!(n <= BENIGN_VOCAB.len());
    let mut picked: Vec<usize> = Vec::with_capacity(n);
    while picked.len() < n {
        let i = rng.gen_range(0..BENIGN_VOCAB.len());
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    picked.into_iter().map(|i| BENIGN_VOCAB[i].to_string()).collect()
}

fn benign_prompt(rng: &mut ChaCha8Rng, n: usize) -> String {
    sample_words(rng, n).join(" ")
}

/// `n_benign` benign words with `word` inserted at a random position.
fn harmful_prompt(rng: &mut ChaCha8Rng, n_benign: usize, word: &str) -> String {
    let benign = sample_words(rng, n_benign);
    insert_word(rng, &benign, word)
}

fn insert_word(rng: &mut ChaCha8Rng, benign: &[String], word: &str) -> String {
    let mut words: Vec<String> = benign.to_vec();
    let pos = rng.gen_range(0..=words.len());
    words.insert(pos, word.to_string());
    words.join(" ")
}

/// Pooled-vector norm of a prompt: equals its geodesic distance to the
/// origin under the toy encoder.
pub fn prompt_distance(text: &str, params: &ToyEncoderParams) -> f64 {
    let tp = tokenize(text, params.max_len).expect("fixture prompts tokenize");
    let inputs = token_inputs(&tp, params).expect("fixture prompts embed");
    euclidean_norm(&crate::encoder::pool(&inputs, params.gamma))
}

/// Distance ceiling for sanitizer outputs enforced at generation time.
const SANITIZED_DISTANCE_CAP: f64 = 1.30;

/// Distance floor for harmful test prompts enforced at generation time.
const HARMFUL_DISTANCE_FLOOR: f64 = 1.55;

/// True when removing or replacing `word` from `context + word` leaves every
/// variant well inside the benign region.
fn sanitized_variants_are_cool(
    context: &[String],
    word: &str,
    params: &ToyEncoderParams,
    thesaurus: &BTreeMap<String, Vec<String>>,
    rewrites: &BTreeMap<String, String>,
) -> bool {
    let removal = context.join(" ");
    if prompt_distance(&removal, params) > SANITIZED_DISTANCE_CAP {
        return false;
    }
    let mut variants: Vec<&str> = Vec::new();
    if let Some(antonyms) = thesaurus.get(word) {
        variants.extend(antonyms.iter().map(String::as_str));
    }
    if let Some(rewrite) = rewrites.get(word) {
        variants.push(rewrite.as_str());
    }
    for replacement in variants {
        // Position does not affect the pooled embedding, so checking the
        // replacement appended is equivalent to any insertion point.
        let text = format!("{removal} {replacement}");
        if prompt_distance(&text, params) > SANITIZED_DISTANCE_CAP {
            return false;
        }
    }
    true
}

/// Sum of tanh-activated token inputs for a word encoded alone: the word's
/// contribution direction to any pooled embedding that contains it.
pub fn word_pattern(word: &str, params: &ToyEncoderParams) -> Vec<f64> {
    let tp = tokenize(word, params.max_len).expect("fixture words tokenize");
    let inputs = token_inputs(&tp, params).expect("fixture words embed");
    let mut v = vec![0.0; params.dim()];
    for row in &inputs {
        for (j, x) in row.iter().enumerate() {
            v[j] += x.tanh();
        }
    }
    v
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot / (euclidean_norm(a) * euclidean_norm(b))
}

/// Ranks mild lexicon words by pattern alignment with each strong word and
/// splits the strong lexicon between the two replacement tables: even-indexed
/// words get two mid-ranked antonyms (and no rewrite), odd-indexed words get
/// the best-aligned rewrite (and no antonyms). A rewrite preserves strictly
/// more of the original direction than an antonym, which preserves more than
/// removal; words missing from the thesaurus force the antonym-miss path.
fn build_replacement_tables(
    params: &ToyEncoderParams,
) -> (BTreeMap<String, Vec<String>>, BTreeMap<String, String>) {
    // Only the cooler half of the mild lexicon (by pattern norm) serves as
    // replacement candidates, keeping every substitution output comfortably
    // inside the benign radius.
    let mut by_norm: Vec<(String, Vec<f64>)> = MILD_LEXICON
        .iter()
        .map(|w| ((*w).to_string(), word_pattern(w, params)))
        .collect();
    by_norm.sort_by(|a, b| {
        euclidean_norm(&a.1)
            .partial_cmp(&euclidean_norm(&b.1))
            .unwrap()
            .then(a.0.cmp(&b.0))
    });
    let mild_patterns: Vec<(String, Vec<f64>)> =
        by_norm.into_iter().take(MILD_LEXICON.len() / 2).collect();

    let mut thesaurus = BTreeMap::new();
    let mut rewrites = BTreeMap::new();
    for (idx, strong) in STRONG_LEXICON.iter().enumerate() {
        let target = word_pattern(strong, params);
        let mut ranked: Vec<(f64, &str)> = mild_patterns
            .iter()
            .map(|(w, p)| (cosine(p, &target), w.as_str()))
            .collect();
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
        if idx % 2 == 0 {
            let mid = ranked.len() / 3;
            thesaurus.insert(
                strong.to_string(),
                vec![ranked[mid].1.to_string(), ranked[mid + 1].1.to_string()],
            );
        } else {
            rewrites.insert(strong.to_string(), ranked[0].1.to_string());
        }
    }
    (thesaurus, rewrites)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{encode, pool};
    use crate::geometry::distance_to_origin;
    use crate::hsvdd::{fit_exact, TrainingConfig, DEFAULT_NU};

    fn pooled(text: &str, params: &ToyEncoderParams) -> Vec<f64> {
        let tp = tokenize(text, params.max_len).unwrap();
        let inputs = token_inputs(&tp, params).unwrap();
        pool(&inputs, params.gamma)
    }

    fn origin_distance(text: &str, params: &ToyEncoderParams) -> f64 {
        euclidean_norm(&pooled(text, params))
    }

    #[test]
    fn corpus_is_deterministic_and_well_formed() {
        let a = build_default_corpus();
        let b = build_default_corpus();
        assert_eq!(a.train.len(), 2000);
        assert_eq!(a.val.len(), 500);
        assert_eq!(a.test.len(), 500);
        for (x, y) in a.train.iter().zip(&b.train) {
            assert_eq!(x.text, y.text);
            assert_eq!(x.id, y.id);
        }
        for (x, y) in a.test.iter().zip(&b.test) {
            assert_eq!(x.text, y.text);
        }
        assert_eq!(a.thesaurus, b.thesaurus);
        assert_eq!(a.llm_rewrites, b.llm_rewrites);

        // Benign prompts are lexicon-free; harmful prompts contain exactly
        // one lexicon word.
        for rec in a.train.iter().chain(a.val.iter()).chain(a.test.iter()) {
            let lexical: Vec<&str> = rec
                .text
                .split(' ')
                .filter(|w| a.params.harmful_lexicon.contains(*w))
                .collect();
            match rec.label {
                Some(0) => assert!(lexical.is_empty(), "benign {} has {:?}", rec.id, lexical),
                Some(1) => assert_eq!(lexical.len(), 1, "harmful {} has {:?}", rec.id, lexical),
                other => panic!("unexpected label {other:?}"),
            }
        }

        // Pairs share ids and differ in label.
        for pair in a.test.chunks(2) {
            assert_eq!(pair[0].pair_id, pair[1].pair_id);
            assert_eq!(pair[0].label, Some(0));
            assert_eq!(pair[1].label, Some(1));
        }

        // Vocabulary sanity: no overlap between benign words and the lexicon,
        // no duplicates anywhere.
        let mut seen = std::collections::BTreeSet::new();
        for w in BENIGN_VOCAB.iter().chain(MILD_LEXICON).chain(STRONG_LEXICON) {
            assert!(seen.insert(*w), "duplicate vocabulary word {w}");
        }
        for w in BENIGN_VOCAB {
            assert!(!a.params.harmful_lexicon.contains(*w));
        }
        // Strong words tokenize to five subwords, mild and benign to one.
        for w in STRONG_LEXICON {
            assert_eq!(tokenize(w, 77).unwrap().token_count(), 5, "{w}");
        }
        for w in MILD_LEXICON.iter().chain(BENIGN_VOCAB) {
            assert_eq!(tokenize(w, 77).unwrap().token_count(), 1, "{w}");
        }
    }

    #[test]
    fn replacement_tables_partition_strong_words_between_antonyms_and_rewrites() {
        let bundle = build_default_corpus();
        for (idx, strong) in STRONG_LEXICON.iter().enumerate() {
            let target = word_pattern(strong, &bundle.params);
            let alignment = |w: &str| cosine(&word_pattern(w, &bundle.params), &target);
            if idx % 2 == 0 {
                // Covered by the thesaurus, invisible to the mock LLM.
                assert!(!bundle.llm_rewrites.contains_key(*strong), "{strong}");
                let antonyms = bundle.thesaurus.get(*strong).expect("thesaurus entry");
                assert_eq!(antonyms.len(), 2);
                assert_ne!(antonyms[0], antonyms[1]);
                for a in antonyms {
                    assert!(MILD_LEXICON.contains(&a.as_str()), "{a}");
                }
                // Antonyms are deliberately mid-ranked: some mild word aligns
                // strictly better with the strong word's direction.
                let best = MILD_LEXICON
                    .iter()
                    .map(|w| alignment(w))
                    .fold(f64::NEG_INFINITY, f64::max);
                for a in antonyms {
                    assert!(best > alignment(a), "{strong}: antonym {a} is top-ranked");
                }
            } else {
                // Missed by the thesaurus, rewritten by the mock LLM.
                assert!(!bundle.thesaurus.contains_key(*strong), "{strong}");
                let rewrite = bundle.llm_rewrites.get(*strong).expect("rewrite entry");
                assert!(MILD_LEXICON.contains(&rewrite.as_str()), "{rewrite}");
                // The rewrite is chosen for alignment: it beats the bulk of
                // the mild lexicon at preserving the word's direction.
                let mut all: Vec<f64> = MILD_LEXICON.iter().map(|w| alignment(w)).collect();
                all.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let median = all[all.len() / 2];
                let rw = alignment(rewrite);
                assert!(rw > 0.0, "{strong}: rewrite alignment {rw} not positive");
                assert!(rw > median, "{strong}: rewrite alignment {rw} below median {median}");
            }
        }
    }

    /// End-to-end feasibility of the corpus: radius placement, detection
    /// separation, sanitizer-output coverage and similarity ordering. These
    /// are the quantities the acceptance checks rely on, asserted here with
    /// extra buffer so regressions surface close to their cause.
    #[test]
    fn corpus_separates_detection_sanitization_and_boundary_cases() {
        let bundle = build_default_corpus();
        let params = &bundle.params;

        let train_distances: Vec<f64> = bundle
            .train
            .iter()
            .map(|r| origin_distance(&r.text, params))
            .collect();
        let radius = fit_exact(&train_distances, DEFAULT_NU).unwrap();
        let hmin = bundle
            .test
            .iter()
            .filter(|r| r.label == Some(1))
            .map(|r| origin_distance(&r.text, params))
            .fold(f64::INFINITY, f64::min);
        let tmax = train_distances.iter().cloned().fold(0.0, f64::max);
        eprintln!("radius={radius:.4} harmful_min={hmin:.4} train_max={tmax:.4}");

        // Verify the pooled norm really is the geodesic distance to origin.
        let sample = encode(&tokenize(&bundle.train[0].text, 77).unwrap(), params).unwrap();
        let d_geo = distance_to_origin(&sample, &params.curvature).unwrap();
        assert!((d_geo - train_distances[0]).abs() < 1e-9);

        // Detection separation on the paired test set.
        let mut harmful_min = f64::INFINITY;
        let mut benign_flagged = 0usize;
        let mut fn_count = 0usize;
        for rec in &bundle.test {
            let d = origin_distance(&rec.text, params);
            match rec.label {
                Some(1) => {
                    harmful_min = harmful_min.min(d);
                    if d <= radius {
                        fn_count += 1;
                    }
                }
                _ => {
                    if d > radius {
                        benign_flagged += 1;
                    }
                }
            }
        }
        let n = bundle.test.len() / 2;
        let fp_rate = benign_flagged as f64 / n as f64;
        let tp = n - fn_count;
        let precision = tp as f64 / (tp + benign_flagged) as f64;
        let recall = tp as f64 / n as f64;
        let f1 = 2.0 * precision * recall / (precision + recall);
        assert!(f1 >= 0.97, "test F1 {f1} too low (radius {radius})");
        assert!(fp_rate <= 0.02, "benign flag rate {fp_rate} too high");
        assert!(
            harmful_min > radius + 0.05,
            "harmful min {harmful_min} too close to radius {radius}"
        );

        // Every sanitizer output must fall safely inside the radius, for all
        // three strategies, so neutralization rates tie at 1.0 and only the
        // similarity ordering separates the strategies. The simulation
        // mirrors the sanitizer: antonym chosen by word-level alignment
        // argmax, removal on a thesaurus miss, and the mock rewrite only for
        // the words the thesaurus misses.
        let mut sim_removal = 0.0;
        let mut sim_thesaurus = 0.0;
        let mut sim_llm = 0.0;
        let mut count = 0.0;
        for rec in bundle.test.iter().filter(|r| r.label == Some(1)) {
            let words: Vec<&str> = rec.text.split(' ').collect();
            let lex = *words
                .iter()
                .find(|w| params.harmful_lexicon.contains(**w))
                .unwrap();
            let u_orig = pooled(&rec.text, params);

            let removal: Vec<&str> = words.iter().copied().filter(|w| *w != lex).collect();
            let removal_text = removal.join(" ");
            let d = origin_distance(&removal_text, params);
            assert!(d < radius - 0.03, "removal output {d} vs radius {radius}");
            let removal_sim = cosine(&u_orig, &pooled(&removal_text, params));
            sim_removal += removal_sim;

            let antonym_sim = bundle.thesaurus.get(lex).map(|antonyms| {
                let target = word_pattern(lex, params);
                let mut chosen = &antonyms[0];
                let mut chosen_cos = f64::NEG_INFINITY;
                for a in antonyms {
                    let text = replace_word(&words, lex, a);
                    let d = origin_distance(&text, params);
                    assert!(d < radius - 0.03, "thesaurus output {d} vs radius {radius}");
                    let c = cosine(&word_pattern(a, params), &target);
                    if c > chosen_cos {
                        chosen = a;
                        chosen_cos = c;
                    }
                }
                cosine(&u_orig, &pooled(&replace_word(&words, lex, chosen), params))
            });
            let rewrite_sim = bundle.llm_rewrites.get(lex).map(|rewrite| {
                let text = replace_word(&words, lex, rewrite);
                let d = origin_distance(&text, params);
                assert!(d < radius - 0.03, "rewrite output {d} vs radius {radius}");
                cosine(&u_orig, &pooled(&text, params))
            });

            // Exactly one table covers each strong word, so the thesaurus
            // strategy falls back to removal where the LLM one rewrites.
            assert!(antonym_sim.is_some() != rewrite_sim.is_some(), "{lex}");
            sim_thesaurus += antonym_sim.unwrap_or(removal_sim);
            sim_llm += antonym_sim.or(rewrite_sim).unwrap();
            count += 1.0;
        }
        sim_removal /= count;
        sim_thesaurus /= count;
        sim_llm /= count;
        eprintln!("sim removal={sim_removal:.4} thesaurus={sim_thesaurus:.4} llm={sim_llm:.4}");
        assert!(
            sim_removal < sim_thesaurus && sim_thesaurus < sim_llm,
            "similarity ordering violated: {sim_removal} {sim_thesaurus} {sim_llm}"
        );
        assert!(
            sim_llm - sim_removal >= 0.08,
            "similarity gap too small: {} vs {}",
            sim_llm,
            sim_removal
        );

        // Mild validation prompts straddle the boundary: mostly inside at the
        // default radius, mostly outside at the training median, so a nu
        // sweep has an interior F1 optimum.
        let mild: Vec<f64> = bundle
            .val
            .iter()
            .filter(|r| r.id.starts_with("val-mild"))
            .map(|r| origin_distance(&r.text, params))
            .collect();
        let miss_at_default = mild.iter().filter(|d| **d <= radius).count() as f64 / mild.len() as f64;
        assert!(miss_at_default >= 0.9, "mild prompts too hot: {miss_at_default}");
        let mut sorted = train_distances.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        let caught_at_median = mild.iter().filter(|d| **d > median).count() as f64 / mild.len() as f64;
        assert!(caught_at_median >= 0.6, "mild prompts too cold: {caught_at_median}");

        // The far concept is far outside and the neutral one well inside.
        let far = origin_distance(&bundle.far_concept, params);
        assert!(far > radius + 1.0, "far concept {far} vs radius {radius}");
        let near = origin_distance(&bundle.neutral_concept, params);
        assert!(near < radius, "neutral concept {near} vs radius {radius}");

        let _ = TrainingConfig::default();
    }

    fn replace_word(words: &[&str], from: &str, to: &str) -> String {
        words
            .iter()
            .map(|w| if *w == from { to } else { *w })
            .collect::<Vec<_>>()
            .join(" ")
    }
}
