//! Word-level prompt sanitization driven by detector feedback.
//!
//! The loop: classify the prompt; while it stays harmful and iterations
//! remain, attribute the detection margin to words, take the top-scoring
//! positive words, neutralize each one (remove it, replace it with an
//! antonym, or ask a language model for a rewrite, depending on the
//! strategy), then re-tokenize and re-run the detector. Only words that push
//! toward the harmful side (positive attribution) are ever touched, and the
//! outcome records one action per flagged word per iteration.
//!
//! Strategies escalate in how much meaning they try to preserve:
//!
//! * removal — delete the flagged word;
//! * thesaurus — replace it with the best-aligned antonym from an offline
//!   thesaurus, falling back to removal when the word has no entry;
//! * thesaurus + LLM — as above, but an antonym miss consults a language
//!   model instead of removing. In mock mode that is a deterministic
//!   word-level table; in live mode the model rewrites the whole sentence
//!   and the first reply line replaces the prompt. Placeholder or empty
//!   replies, and endpoints that stay down after retries, fall back to
//!   removal with the reason recorded on the action.
//!
//! The reported similarity is the cosine between the pooled pre-map vectors
//! of the original and final prompts.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attribution::{integrated_gradients, AttributionError, AttributionVector, IgConfig};
use crate::encoder::{
    encode, tokenize, word_similarity, EncoderError, TokenizedPrompt, ToyEncoderParams,
};
use crate::hsvdd::{classify, HsvddError, HsvddModel, Label};
use crate::llm::{render_instruction, LlmClient, LlmError};

/// Flagged words neutralized per iteration.
pub const DEFAULT_K_PER_ITER: usize = 1;

/// Iteration cap before sanitization gives up.
pub const DEFAULT_MAX_ITER: usize = 5;

/// Maximum concurrent language-model requests during a batch run.
pub const LLM_MAX_IN_FLIGHT: usize = 4;

/// Errors from sanitization. Per-prompt failures inside a batch are
/// aggregated into the batch report instead of aborting it.
#[derive(Debug, Error)]
pub enum SanitizerError {
    #[error("prompt is already classified safe; nothing to sanitize")]
    NotHarmful,
    #[error("prompt ran out of words before the detector accepted it")]
    ExhaustedPrompt,
    #[error("no antonym candidate for '{word}' could be scored")]
    Selection { word: String },
    #[error("invalid thesaurus: {0}")]
    BadThesaurus(String),
    #[error("the LLM strategy needs a nonempty unsafe-word lexicon")]
    EmptyLexicon,
    #[error("encoder error: {0}")]
    Encoder(#[from] EncoderError),
    #[error("detector error: {0}")]
    Detector(#[from] HsvddError),
    #[error("attribution error: {0}")]
    Attribution(#[from] AttributionError),
    #[error("language-model rewrite failed: {0}")]
    Llm(#[from] LlmError),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed thesaurus file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Offline antonym table: word → ordered antonym candidates. Keys and values
/// are nonempty and lowercase, and no word lists itself as its own antonym.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Thesaurus {
    entries: BTreeMap<String, Vec<String>>,
}

impl Thesaurus {
    /// Validates the invariants and builds the table.
    pub fn new(entries: BTreeMap<String, Vec<String>>) -> Result<Self, SanitizerError> {
        for (word, antonyms) in &entries {
            if word.is_empty() {
                return Err(SanitizerError::BadThesaurus("empty key".to_string()));
            }
            if *word != word.to_lowercase() {
                return Err(SanitizerError::BadThesaurus(format!(
                    "key '{word}' is not lowercase"
                )));
            }
            if antonyms.is_empty() {
                return Err(SanitizerError::BadThesaurus(format!(
                    "'{word}' has an empty antonym list"
                )));
            }
            for a in antonyms {
                if a.is_empty() {
                    return Err(SanitizerError::BadThesaurus(format!(
                        "'{word}' has an empty antonym"
                    )));
                }
                if *a != a.to_lowercase() {
                    return Err(SanitizerError::BadThesaurus(format!(
                        "antonym '{a}' of '{word}' is not lowercase"
                    )));
                }
                if a == word {
                    return Err(SanitizerError::BadThesaurus(format!(
                        "'{word}' lists itself as an antonym"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    /// Antonym candidates for `word`, in stored order.
    pub fn lookup(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads a JSON object `word → [antonyms]` and validates it.
    pub fn load(path: &Path) -> Result<Self, SanitizerError> {
        let text = fs::read_to_string(path).map_err(|source| SanitizerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let entries: BTreeMap<String, Vec<String>> =
            serde_json::from_str(&text).map_err(|source| SanitizerError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        Self::new(entries)
    }

    /// Writes the table as pretty-printed JSON (stable key order).
    pub fn save(&self, path: &Path) -> Result<(), SanitizerError> {
        let text = serde_json::to_string_pretty(&self.entries).expect("thesaurus serializes");
        fs::write(path, text + "\n").map_err(|source| SanitizerError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Unsafe-word list that gates which rewrite instruction the language model
/// receives. Stored lowercase; lookups are case-insensitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NsfwLexicon {
    words: BTreeSet<String>,
}

impl NsfwLexicon {
    /// Builds the list, lowercasing and dropping blank entries.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        Self { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Reads a newline-delimited UTF-8 word list.
    pub fn load(path: &Path) -> Result<Self, SanitizerError> {
        let text = fs::read_to_string(path).map_err(|source| SanitizerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::new(text.lines()))
    }

    /// Writes one word per line.
    pub fn save(&self, path: &Path) -> Result<(), SanitizerError> {
        let mut text = self.words.iter().cloned().collect::<Vec<_>>().join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|source| SanitizerError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// The three neutralization strategies, in increasing order of semantic
/// preservation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Removal,
    Thesaurus,
    ThesaurusLlm,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Removal => "removal",
            Strategy::Thesaurus => "thesaurus",
            Strategy::ThesaurusLlm => "thesaurus-llm",
        }
    }
}

/// What happened to one flagged word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum WordAction {
    /// Word deleted; `note` records why a fallback fired (e.g.
    /// "llm-unavailable") when the deletion was not the chosen strategy.
    Removed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    /// Word replaced by a thesaurus antonym.
    Antonym { replacement: String },
    /// Word (mock mode) or whole sentence (live mode) rewritten by the
    /// language model.
    Llm { replacement: String },
    /// Word left in place (a sentence-level rewrite in the same iteration
    /// already superseded it).
    Kept,
}

/// One action applied to one flagged word during one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEntry {
    pub word: String,
    pub iteration: usize,
    #[serde(flatten)]
    pub action: WordAction,
}

/// Full record of a sanitization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanitizationOutcome {
    pub original: String,
    pub sanitized: String,
    pub actions: Vec<ActionEntry>,
    /// Edit iterations actually applied.
    pub iterations: usize,
    /// 0 = the final text classifies safe, 1 = still harmful.
    pub final_label: u8,
    /// Pooled pre-map cosine between original and final text.
    pub similarity: f64,
}

/// Knobs shared by every strategy.
#[derive(Debug, Clone)]
pub struct SanitizeOptions {
    /// Flagged words neutralized per iteration.
    pub k_per_iter: usize,
    /// Maximum edit iterations.
    pub max_iter: usize,
    /// Attribution settings for picking the words.
    pub ig: IgConfig,
}

impl Default for SanitizeOptions {
    fn default() -> Self {
        Self {
            k_per_iter: DEFAULT_K_PER_ITER,
            max_iter: DEFAULT_MAX_ITER,
            ig: IgConfig::default(),
        }
    }
}

/// Renders the rewrite instruction for one word: lexicon words get the
/// unconditional rewrite template, everything else the context-sensitive
/// one.
pub fn build_llm_instruction(word: &str, original_prompt: &str, lexicon: &NsfwLexicon) -> String {
    render_instruction(word, original_prompt, lexicon.contains(word))
}

/// Picks the antonym with the highest word-level similarity to `word`; ties
/// keep the earliest candidate. Errors only when no candidate can be scored.
pub fn select_antonym(
    word: &str,
    candidates: &[String],
    params: &ToyEncoderParams,
) -> Result<String, SanitizerError> {
    let mut best: Option<(f64, &String)> = None;
    for candidate in candidates {
        let Ok(sim) = word_similarity(word, candidate, params) else {
            continue;
        };
        if best.map_or(true, |(b, _)| sim > b) {
            best = Some((sim, candidate));
        }
    }
    match best {
        Some((_, candidate)) => Ok(candidate.clone()),
        None => Err(SanitizerError::Selection {
            word: word.to_string(),
        }),
    }
}

/// Deletes the flagged words outright.
pub fn sanitize_removal(
    prompt: &str,
    model: &HsvddModel,
    params: &ToyEncoderParams,
    opts: &SanitizeOptions,
) -> Result<SanitizationOutcome, SanitizerError> {
    run(prompt, model, params, opts, &Mode::Removal)
}

/// Replaces flagged words with their best antonym; words without a thesaurus
/// entry are removed.
pub fn sanitize_thesaurus(
    prompt: &str,
    model: &HsvddModel,
    params: &ToyEncoderParams,
    thesaurus: &Thesaurus,
    opts: &SanitizeOptions,
) -> Result<SanitizationOutcome, SanitizerError> {
    run(prompt, model, params, opts, &Mode::Thesaurus { thesaurus })
}

/// Thesaurus first; on an antonym miss the language model supplies the
/// replacement (word-level in mock mode, whole-sentence in live mode).
pub fn sanitize_thesaurus_llm(
    prompt: &str,
    model: &HsvddModel,
    params: &ToyEncoderParams,
    thesaurus: &Thesaurus,
    lexicon: &NsfwLexicon,
    client: &LlmClient,
    opts: &SanitizeOptions,
) -> Result<SanitizationOutcome, SanitizerError> {
    if lexicon.is_empty() {
        return Err(SanitizerError::EmptyLexicon);
    }
    run(
        prompt,
        model,
        params,
        opts,
        &Mode::ThesaurusLlm {
            thesaurus,
            lexicon,
            client,
        },
    )
}

/// Strategy dispatch for the shared loop.
enum Mode<'a> {
    Removal,
    Thesaurus {
        thesaurus: &'a Thesaurus,
    },
    ThesaurusLlm {
        thesaurus: &'a Thesaurus,
        lexicon: &'a NsfwLexicon,
        client: &'a LlmClient,
    },
}

fn classify_text(
    text: &str,
    model: &HsvddModel,
    params: &ToyEncoderParams,
) -> Result<Label, SanitizerError> {
    let tp = tokenize(text, params.max_len)?;
    let point = encode(&tp, params)?;
    Ok(classify(&point, model)?.label)
}

/// Indices of the `k` highest positive-attribution words, best first; ties
/// keep the earlier position.
fn top_positive_indices(av: &AttributionVector, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..av.word_scores.len())
        .filter(|&i| av.word_scores[i] > 0.0)
        .collect();
    order.sort_by(|&a, &b| {
        av.word_scores[b]
            .partial_cmp(&av.word_scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

fn run(
    prompt: &str,
    model: &HsvddModel,
    params: &ToyEncoderParams,
    opts: &SanitizeOptions,
    mode: &Mode,
) -> Result<SanitizationOutcome, SanitizerError> {
    let original = prompt.to_string();
    if !classify_text(&original, model, params)?.is_harmful() {
        return Err(SanitizerError::NotHarmful);
    }

    let mut current = original.clone();
    let mut actions: Vec<ActionEntry> = Vec::new();
    let mut iterations = 0usize;
    let mut final_label = Label::Harmful;

    for iteration in 1..=opts.max_iter {
        let tp = tokenize(&current, params.max_len)?;
        let av = integrated_gradients(&tp, model, params, &opts.ig)?;
        let flagged = top_positive_indices(&av, opts.k_per_iter);
        if flagged.is_empty() {
            // Nothing pushes toward harmful; give up with the label as-is.
            break;
        }
        iterations = iteration;
        current = apply_iteration(mode, params, &tp, &flagged, iteration, &mut actions)?;
        if current.split_whitespace().next().is_none() {
            return Err(SanitizerError::ExhaustedPrompt);
        }
        if !classify_text(&current, model, params)?.is_harmful() {
            final_label = Label::Safe;
            break;
        }
    }

    let similarity = word_similarity(&original, &current, params)?;
    Ok(SanitizationOutcome {
        original,
        sanitized: current,
        actions,
        iterations,
        final_label: final_label.as_u8(),
        similarity,
    })
}

/// Neutralizes the flagged word positions and rebuilds the prompt. A live
/// sentence-level rewrite replaces the whole text at once; remaining flagged
/// words in that iteration are recorded as kept.
fn apply_iteration(
    mode: &Mode,
    params: &ToyEncoderParams,
    tp: &TokenizedPrompt,
    flagged: &[usize],
    iteration: usize,
    actions: &mut Vec<ActionEntry>,
) -> Result<String, SanitizerError> {
    let words = tp.words();
    let mut removed: BTreeSet<usize> = BTreeSet::new();
    let mut replaced: BTreeMap<usize, String> = BTreeMap::new();

    for (fi, &pos) in flagged.iter().enumerate() {
        let word = words[pos].clone();
        match mode {
            Mode::Removal => {
                removed.insert(pos);
                actions.push(ActionEntry {
                    word,
                    iteration,
                    action: WordAction::Removed { note: None },
                });
            }
            Mode::Thesaurus { thesaurus } => match thesaurus.lookup(&word) {
                Some(candidates) => {
                    let antonym = select_antonym(&word, candidates, params)?;
                    replaced.insert(pos, antonym.clone());
                    actions.push(ActionEntry {
                        word,
                        iteration,
                        action: WordAction::Antonym {
                            replacement: antonym,
                        },
                    });
                }
                None => {
                    removed.insert(pos);
                    actions.push(ActionEntry {
                        word,
                        iteration,
                        action: WordAction::Removed {
                            note: Some("no-antonym".to_string()),
                        },
                    });
                }
            },
            Mode::ThesaurusLlm {
                thesaurus,
                lexicon,
                client,
            } => match thesaurus.lookup(&word) {
                Some(candidates) => {
                    let antonym = select_antonym(&word, candidates, params)?;
                    replaced.insert(pos, antonym.clone());
                    actions.push(ActionEntry {
                        word,
                        iteration,
                        action: WordAction::Antonym {
                            replacement: antonym,
                        },
                    });
                }
                None if client.is_mock() => match client.mock_rewrite(&word) {
                    Some(rewrite) => {
                        replaced.insert(pos, rewrite.to_string());
                        actions.push(ActionEntry {
                            word,
                            iteration,
                            action: WordAction::Llm {
                                replacement: rewrite.to_string(),
                            },
                        });
                    }
                    None => {
                        removed.insert(pos);
                        actions.push(ActionEntry {
                            word,
                            iteration,
                            action: WordAction::Removed {
                                note: Some("no-mock-rewrite".to_string()),
                            },
                        });
                    }
                },
                None => {
                    let instruction =
                        render_instruction(&word, tp.text(), lexicon.contains(&word));
                    match client.rewrite_sentence(&instruction) {
                        Ok(sentence) => {
                            actions.push(ActionEntry {
                                word,
                                iteration,
                                action: WordAction::Llm {
                                    replacement: sentence.clone(),
                                },
                            });
                            // The whole sentence changed; later flagged words
                            // no longer exist as positions.
                            for &rest in &flagged[fi + 1..] {
                                actions.push(ActionEntry {
                                    word: words[rest].clone(),
                                    iteration,
                                    action: WordAction::Kept,
                                });
                            }
                            return Ok(normalize_whitespace(&sentence));
                        }
                        Err(err) => {
                            let note = match err {
                                LlmError::Unavailable { .. } => "llm-unavailable",
                                LlmError::EmptyReply => "empty-reply",
                                LlmError::PlaceholderReply(_) => "placeholder-reply",
                                LlmError::BadReplySchema(_) => "bad-reply-schema",
                                other => return Err(other.into()),
                            };
                            removed.insert(pos);
                            actions.push(ActionEntry {
                                word,
                                iteration,
                                action: WordAction::Removed {
                                    note: Some(note.to_string()),
                                },
                            });
                        }
                    }
                }
            },
        }
    }

    let rebuilt: Vec<&str> = words
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed.contains(i))
        .map(|(i, w)| replaced.get(&i).map(String::as_str).unwrap_or(w.as_str()))
        .collect();
    Ok(rebuilt.join(" "))
}

fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Per-prompt result inside a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BatchItem {
    /// Detector said safe; no sanitization attempted.
    AlreadySafe { prompt: String },
    /// Sanitization ran to completion (successfully neutralized or not).
    Sanitized {
        #[serde(flatten)]
        outcome: SanitizationOutcome,
    },
    /// Sanitization failed for this prompt; the batch continues.
    Error { prompt: String, message: String },
}

/// Aggregate batch statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub total: usize,
    pub already_safe: usize,
    /// Harmful prompts sanitization was attempted on.
    pub attempted: usize,
    /// Attempts whose final text classifies safe.
    pub neutralized: usize,
    pub errors: usize,
    /// neutralized / attempted; `None` when there were no harmful inputs.
    pub neutralization_rate: Option<f64>,
    /// Mean similarity over completed outcomes; `None` when there are none.
    pub mean_similarity: Option<f64>,
}

/// Batch output: per-item results in input order plus the summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub items: Vec<BatchItem>,
    pub summary: BatchSummary,
}

/// Sanitizes every harmful prompt in the batch with one strategy. Safe
/// prompts are passed through, per-prompt failures are recorded without
/// aborting the batch. Live language-model batches run with at most
/// [`LLM_MAX_IN_FLIGHT`] prompts in flight; everything else is sequential.
pub fn sanitize_batch(
    prompts: &[String],
    strategy: Strategy,
    model: &HsvddModel,
    params: &ToyEncoderParams,
    thesaurus: Option<&Thesaurus>,
    lexicon: Option<&NsfwLexicon>,
    client: Option<&LlmClient>,
    opts: &SanitizeOptions,
) -> Result<BatchReport, SanitizerError> {
    let mode = match strategy {
        Strategy::Removal => Mode::Removal,
        Strategy::Thesaurus => Mode::Thesaurus {
            thesaurus: thesaurus.ok_or_else(|| {
                SanitizerError::BadThesaurus("thesaurus strategy needs a thesaurus".to_string())
            })?,
        },
        Strategy::ThesaurusLlm => {
            let thesaurus = thesaurus.ok_or_else(|| {
                SanitizerError::BadThesaurus("thesaurus strategy needs a thesaurus".to_string())
            })?;
            let lexicon = lexicon.ok_or(SanitizerError::EmptyLexicon)?;
            if lexicon.is_empty() {
                return Err(SanitizerError::EmptyLexicon);
            }
            let client = client.ok_or(LlmError::MissingEndpoint)?;
            Mode::ThesaurusLlm {
                thesaurus,
                lexicon,
                client,
            }
        }
    };

    let sanitize_one = |prompt: &String| -> BatchItem {
        match classify_text(prompt, model, params) {
            Ok(label) if !label.is_harmful() => BatchItem::AlreadySafe {
                prompt: prompt.clone(),
            },
            Ok(_) => match run(prompt, model, params, opts, &mode) {
                Ok(outcome) => BatchItem::Sanitized { outcome },
                Err(err) => BatchItem::Error {
                    prompt: prompt.clone(),
                    message: err.to_string(),
                },
            },
            Err(err) => BatchItem::Error {
                prompt: prompt.clone(),
                message: err.to_string(),
            },
        }
    };

    let live_llm = matches!(&mode, Mode::ThesaurusLlm { client, .. } if !client.is_mock());
    let items: Vec<BatchItem> = if live_llm {
        // Bound concurrent LLM traffic: each worker holds at most one
        // request in flight, so a chunk of workers bounds the total.
        let mut items = Vec::with_capacity(prompts.len());
        for chunk in prompts.chunks(LLM_MAX_IN_FLIGHT) {
            let chunk_items = std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|p| scope.spawn(|| sanitize_one(p)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("sanitizer worker panicked"))
                    .collect::<Vec<_>>()
            });
            items.extend(chunk_items);
        }
        items
    } else {
        prompts.iter().map(sanitize_one).collect()
    };

    let already_safe = items
        .iter()
        .filter(|i| matches!(i, BatchItem::AlreadySafe { .. }))
        .count();
    let errors = items
        .iter()
        .filter(|i| matches!(i, BatchItem::Error { .. }))
        .count();
    let outcomes: Vec<&SanitizationOutcome> = items
        .iter()
        .filter_map(|i| match i {
            BatchItem::Sanitized { outcome } => Some(outcome),
            _ => None,
        })
        .collect();
    let attempted = outcomes.len() + errors;
    let neutralized = outcomes.iter().filter(|o| o.final_label == 0).count();
    let neutralization_rate = if attempted == 0 {
        None
    } else {
        Some(neutralized as f64 / attempted as f64)
    };
    let mean_similarity = if outcomes.is_empty() {
        None
    } else {
        Some(outcomes.iter().map(|o| o.similarity).sum::<f64>() / outcomes.len() as f64)
    };

    let summary = BatchSummary {
        total: prompts.len(),
        already_safe,
        attempted,
        neutralized,
        errors,
        neutralization_rate,
        mean_similarity,
    };
    Ok(BatchReport { items, summary })
}
