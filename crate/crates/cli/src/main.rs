//! `hype` — command-line front end for the hyperbolic prompt-safety toolkit.
//!
//! Subcommands cover the full pipeline: corpus generation, boundary training,
//! detection, word-level explanation, sanitization, embedding-level attacks,
//! metric tables, embedding diagnostics, radius-parameter sweeps, flagged-word
//! frequency reports, and cosine retrieval over embedding pools.
//!
//! Conventions:
//! - prompt inputs/outputs are JSONL; embedding pools use the binary or JSONL
//!   embedding format (sniffed automatically);
//! - tables render as TSV (fixed decimals, `undefined` for flagged values) or
//!   JSON (full precision, `null` for flagged values) via `--format`;
//! - every command is deterministic for fixed inputs and seeds: map keys are
//!   sorted, no timestamps are recorded, reruns are byte-identical;
//! - exit codes: 0 success, 2 validation/input error, 3 external-service
//!   failure (the rewrite service could not be reached).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hype_core::attacks::{adaptive_attack, AdaptiveAttackConfig, AttackResult};
use hype_core::attribution::{integrated_gradients, top_k_words, IgConfig};
use hype_core::dataset::{load_dataset_jsonl, DatasetRecord};
use hype_core::embed::{load_embeddings, store_embeddings, EmbedFormat, EmbeddingRecord, EmbeddingSet};
use hype_core::encoder::{encode, tokenize, ToyEncoderParams};
use hype_core::fixture::{build_corpus, FixtureConfig};
use hype_core::geometry::{ambient_cosine, distance_to_origin, CurvatureParams, HyperbolicPoint};
use hype_core::hsvdd::{classify, fit_from_points, load_model, save_model, Solver, TrainingConfig, DEFAULT_NU};
use hype_core::llm::{LlmClient, LlmClientConfig};
use hype_core::metrics::{
    accuracy, diagnostics_report, linear_cka, nu_sweep, precision_recall_f1, rank_by_cosine,
    safe_at_k, word_frequency_report, ConfusionCounts, DistanceMatrix,
};
use hype_core::sanitizer::{
    sanitize_batch, BatchItem, NsfwLexicon, SanitizeOptions, Strategy, Thesaurus, WordAction,
};

/// Marker error: the external rewrite service failed. Mapped to exit code 3.
#[derive(Debug)]
struct ExternalFailure(String);

impl fmt::Display for ExternalFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "external service failure: {}", self.0)
    }
}

impl std::error::Error for ExternalFailure {}

#[derive(Parser)]
#[command(
    name = "hype",
    version,
    about = "Hyperbolic one-class prompt-safety detector, explainer, sanitizer, and eval harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the detection boundary on benign prompts or embeddings.
    Train(TrainArgs),
    /// Classify prompts against a trained boundary.
    Detect(DetectArgs),
    /// Attribute each verdict to words via integrated gradients.
    Explain(ExplainArgs),
    /// Neutralize harmful prompts word by word.
    Sanitize(SanitizeArgs),
    /// Run the gradient-guided token attack against the detector.
    Attack(AttackArgs),
    /// Score verdicts against gold labels.
    Eval(EvalArgs),
    /// Embedding-space diagnostics over a labeled pool.
    Diagnose(DiagnoseArgs),
    /// Refit the boundary across a grid of slack fractions.
    SweepNu(SweepNuArgs),
    /// Aggregate flagged-word frequencies from explanation output.
    Wordfreq(WordfreqArgs),
    /// Rank an embedding pool by cosine similarity to a query prompt.
    Retrieve(RetrieveArgs),
    /// Generate the bundled synthetic corpus and side tables.
    GenCorpus(GenCorpusArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        let code = if e.downcast_ref::<ExternalFailure>().is_some() {
            3
        } else {
            2
        };
        std::process::exit(code);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Explain(args) => cmd_explain(args),
        Command::Sanitize(args) => cmd_sanitize(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::SweepNu(args) => cmd_sweep_nu(args),
        Command::Wordfreq(args) => cmd_wordfreq(args),
        Command::Retrieve(args) => cmd_retrieve(args),
        Command::GenCorpus(args) => cmd_gen_corpus(args),
    }
}

// ---------------------------------------------------------------------------
// Shared I/O helpers
// ---------------------------------------------------------------------------

/// Writes `contents` to the path, or to stdout when the path is `-`.
fn write_output(path: &str, contents: &str) -> Result<()> {
    if path == "-" {
        print!("{contents}");
        Ok(())
    } else {
        fs::write(path, contents).with_context(|| format!("writing {path}"))
    }
}

fn load_encoder(path: &Path) -> Result<ToyEncoderParams> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading encoder parameters {}", path.display()))?;
    let params: ToyEncoderParams = serde_json::from_str(&text)
        .with_context(|| format!("parsing encoder parameters {}", path.display()))?;
    // Re-validate the curvature so a hand-edited file cannot smuggle in a
    // non-positive K or zero dimension.
    CurvatureParams::new(params.curvature.k(), params.curvature.dim())
        .with_context(|| format!("invalid curvature in {}", path.display()))?;
    Ok(params)
}

fn load_prompts(path: &Path) -> Result<Vec<DatasetRecord>> {
    let records =
        load_dataset_jsonl(path).with_context(|| format!("loading {}", path.display()))?;
    if records.is_empty() {
        bail!("{} contains no records", path.display());
    }
    Ok(records)
}

fn encode_text(text: &str, params: &ToyEncoderParams) -> Result<HyperbolicPoint> {
    let tp = tokenize(text, params.max_len)?;
    Ok(encode(&tp, params)?)
}

/// Embedding-pool safety sidecar row.
#[derive(Debug, Serialize, Deserialize)]
struct SafetyRow {
    id: String,
    safe: bool,
}

fn load_safety_sidecar(path: &Path) -> Result<BTreeMap<String, bool>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: SafetyRow = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: bad safety row", path.display(), i + 1))?;
        if map.insert(row.id.clone(), row.safe).is_some() {
            bail!("{}: duplicate id '{}'", path.display(), row.id);
        }
    }
    if map.is_empty() {
        bail!("{} contains no safety labels", path.display());
    }
    Ok(map)
}

fn fmt_opt(v: Option<f64>, decimals: usize) -> String {
    match v {
        Some(x) => format!("{x:.decimals$}"),
        None => "undefined".to_string(),
    }
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[derive(Args)]
struct TrainArgs {
    /// Benign prompts (JSONL) or an embedding file with --embeddings.
    #[arg(long)]
    input: PathBuf,
    /// Treat --input as an embedding file instead of prompt JSONL.
    #[arg(long, default_value_t = false)]
    embeddings: bool,
    /// Encoder parameter file (required for prompt input).
    #[arg(long)]
    encoder: Option<PathBuf>,
    /// Where to store the trained boundary.
    #[arg(long)]
    model_out: PathBuf,
    /// Slack fraction: upper bound on the share of training points left
    /// outside the boundary.
    #[arg(long, default_value_t = DEFAULT_NU)]
    nu: f64,
    /// Use the iterative subgradient solver instead of the exact one.
    #[arg(long, default_value_t = false)]
    subgradient: bool,
    /// Seed recorded in model metadata (subgradient solver provenance).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let (points, curvature) = if args.embeddings {
        let set = load_embeddings(&args.input)
            .with_context(|| format!("loading embeddings {}", args.input.display()))?;
        let points: Vec<HyperbolicPoint> = set.records.into_iter().map(|r| r.point).collect();
        (points, set.curvature)
    } else {
        let encoder_path = args
            .encoder
            .as_ref()
            .ok_or_else(|| anyhow!("--encoder is required for prompt input"))?;
        let params = load_encoder(encoder_path)?;
        let records = load_prompts(&args.input)?;
        let mut points = Vec::with_capacity(records.len());
        for record in &records {
            if record.label == Some(1) {
                bail!(
                    "training input must be benign; record '{}' is labeled harmful",
                    record.id
                );
            }
            points.push(
                encode_text(&record.text, &params)
                    .with_context(|| format!("encoding record '{}'", record.id))?,
            );
        }
        (points, params.curvature)
    };

    let cfg = TrainingConfig {
        nu: args.nu,
        solver: if args.subgradient {
            Solver::Subgradient
        } else {
            Solver::Exact
        },
        seed: args.seed,
        ..Default::default()
    };
    let model = fit_from_points(&points, &curvature, &cfg)?;
    save_model(&model, &args.model_out)?;
    eprintln!(
        "trained boundary radius {:.6} (nu {}) on {} points -> {}",
        model.radius(),
        model.nu(),
        model.n_train(),
        args.model_out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    encoder: PathBuf,
    /// Prompts to classify (JSONL).
    #[arg(long)]
    input: PathBuf,
    /// Verdict JSONL destination (`-` for stdout).
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Serialize, Deserialize)]
struct VerdictRow {
    id: String,
    label: u8,
    distance: f64,
    radius: f64,
    margin: f64,
}

fn cmd_detect(args: DetectArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let params = load_encoder(&args.encoder)?;
    let records = load_prompts(&args.input)?;
    let mut out = String::new();
    for record in &records {
        let point = encode_text(&record.text, &params)
            .with_context(|| format!("encoding record '{}'", record.id))?;
        let det = classify(&point, &model)?;
        let row = VerdictRow {
            id: record.id.clone(),
            label: det.label.as_u8(),
            distance: det.distance,
            radius: det.radius,
            margin: det.margin,
        };
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
    }
    write_output(&args.output, &out)
}

// ---------------------------------------------------------------------------
// explain
// ---------------------------------------------------------------------------

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    encoder: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Quadrature steps for the attribution integral.
    #[arg(long, default_value_t = 64)]
    steps: usize,
    /// Number of top positively-attributed words to report per prompt.
    #[arg(long, default_value_t = 3)]
    top_k: usize,
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Serialize)]
struct WordScore<'a> {
    word: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct ExplainRow<'a> {
    id: &'a str,
    /// Detection margin at the prompt.
    value: f64,
    baseline_value: f64,
    completeness_gap: f64,
    words: Vec<WordScore<'a>>,
    /// Up to `top_k` words with positive attribution, strongest first.
    top_words: Vec<String>,
}

fn cmd_explain(args: ExplainArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let params = load_encoder(&args.encoder)?;
    let records = load_prompts(&args.input)?;
    let cfg = IgConfig {
        steps: args.steps,
        ..Default::default()
    };
    let mut out = String::new();
    for record in &records {
        let tp = tokenize(&record.text, params.max_len)?;
        let av = integrated_gradients(&tp, &model, &params, &cfg)
            .with_context(|| format!("attributing record '{}'", record.id))?;
        let words = tp.words();
        let top_words: Vec<String> = top_k_words(&av, words, args.top_k)
            .into_iter()
            .filter(|(_, score)| *score > 0.0)
            .map(|(word, _)| word)
            .collect();
        let row = ExplainRow {
            id: &record.id,
            value: av.value,
            baseline_value: av.baseline_value,
            completeness_gap: av.completeness_gap,
            words: words
                .iter()
                .zip(&av.word_scores)
                .map(|(word, &score)| WordScore { word, score })
                .collect(),
            top_words,
        };
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
    }
    write_output(&args.output, &out)
}

// ---------------------------------------------------------------------------
// sanitize
// ---------------------------------------------------------------------------

#[derive(Args)]
struct SanitizeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    encoder: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Neutralization strategy, in increasing order of semantic
    /// preservation: removal, thesaurus, thesaurus-llm.
    #[arg(long, value_enum)]
    strategy: StrategyArg,
    /// Antonym table (required for thesaurus strategies).
    #[arg(long)]
    thesaurus: Option<PathBuf>,
    /// Unsafe-word list steering the rewrite instruction (thesaurus-llm).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Word-replacement table for the deterministic mock rewrite service;
    /// absent means live service configured via HYPE_LLM_* variables.
    #[arg(long)]
    mock_rewrites: Option<PathBuf>,
    /// Flagged words neutralized per iteration.
    #[arg(long, default_value_t = 1)]
    k_per_iter: usize,
    /// Maximum edit iterations per prompt.
    #[arg(long, default_value_t = 5)]
    max_iter: usize,
    /// Quadrature steps for the attribution integral.
    #[arg(long, default_value_t = 64)]
    steps: usize,
    /// Per-prompt results JSONL (`-` for stdout).
    #[arg(long, default_value = "-")]
    output: String,
    /// Optional batch summary JSON file.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Removal,
    Thesaurus,
    ThesaurusLlm,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Removal => Strategy::Removal,
            StrategyArg::Thesaurus => Strategy::Thesaurus,
            StrategyArg::ThesaurusLlm => Strategy::ThesaurusLlm,
        }
    }
}

#[derive(Serialize)]
struct SanitizeRow<'a> {
    id: &'a str,
    #[serde(flatten)]
    item: &'a BatchItem,
}

fn cmd_sanitize(args: SanitizeArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let params = load_encoder(&args.encoder)?;
    let records = load_prompts(&args.input)?;
    let strategy = Strategy::from(args.strategy);

    let thesaurus = match &args.thesaurus {
        Some(path) => Some(Thesaurus::load(path)?),
        None => None,
    };
    let lexicon = match &args.lexicon {
        Some(path) => Some(NsfwLexicon::load(path)?),
        None => None,
    };
    let client = if strategy == Strategy::ThesaurusLlm {
        let config = match &args.mock_rewrites {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let table: BTreeMap<String, String> = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?;
                LlmClientConfig::mock(table)
            }
            None => LlmClientConfig::from_env(),
        };
        Some(LlmClient::new(config)?)
    } else {
        None
    };

    let opts = SanitizeOptions {
        k_per_iter: args.k_per_iter,
        max_iter: args.max_iter,
        ig: IgConfig {
            steps: args.steps,
            ..Default::default()
        },
    };
    let prompts: Vec<String> = records.iter().map(|r| r.text.clone()).collect();
    let report = sanitize_batch(
        &prompts,
        strategy,
        &model,
        &params,
        thesaurus.as_ref(),
        lexicon.as_ref(),
        client.as_ref(),
        &opts,
    )?;

    let mut out = String::new();
    for (record, item) in records.iter().zip(&report.items) {
        let row = SanitizeRow {
            id: &record.id,
            item,
        };
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
    }
    write_output(&args.output, &out)?;
    if let Some(path) = &args.summary {
        let mut text = serde_json::to_string_pretty(&report.summary)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }

    // The pipeline completes by falling back to removal when the live
    // rewrite service cannot be reached, but the degradation must still be
    // signaled to the caller.
    let service_down = report.items.iter().any(|item| match item {
        BatchItem::Sanitized { outcome } => outcome.actions.iter().any(|a| {
            matches!(
                &a.action,
                WordAction::Removed { note: Some(n) } if n == "llm-unavailable"
            )
        }),
        _ => false,
    });
    if service_down {
        return Err(ExternalFailure(
            "rewrite service unreachable; affected words fell back to removal".to_string(),
        )
        .into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// attack
// ---------------------------------------------------------------------------

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    encoder: PathBuf,
    /// Target prompts (JSONL); every row is attacked.
    #[arg(long)]
    input: PathBuf,
    /// Weight of the boundary hinge in the objective (0 = similarity only).
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Greedy iterations per target.
    #[arg(long, default_value_t = 10)]
    iters: usize,
    /// Replacement candidates sampled per iteration.
    #[arg(long, default_value_t = 32)]
    candidates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Forbid mutating tokens of words on the encoder's offset lexicon.
    #[arg(long, default_value_t = false)]
    keep_lexicon_words: bool,
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Serialize)]
struct AttackRow<'a> {
    id: &'a str,
    #[serde(flatten)]
    result: &'a AttackResult,
}

fn cmd_attack(args: AttackArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let params = load_encoder(&args.encoder)?;
    let records = load_prompts(&args.input)?;
    let cfg = AdaptiveAttackConfig {
        lambda: args.lambda,
        iterations: args.iters,
        candidates_per_step: args.candidates,
        seed: args.seed,
        mutate_all_content_tokens: !args.keep_lexicon_words,
    };
    let mut out = String::new();
    for record in &records {
        let result = adaptive_attack(&record.text, &model, &params, &cfg)
            .with_context(|| format!("attacking record '{}'", record.id))?;
        let row = AttackRow {
            id: &record.id,
            result: &result,
        };
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
    }
    write_output(&args.output, &out)
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

#[derive(Args)]
struct EvalArgs {
    /// Verdict JSONL produced by `detect`.
    #[arg(long)]
    verdicts: PathBuf,
    /// Gold-labeled prompts (JSONL with `label` on every scored row).
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Serialize)]
struct EvalReport {
    counts: ConfusionCounts,
    accuracy: f64,
    precision: Option<f64>,
    recall: Option<f64>,
    f1: Option<f64>,
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let text = fs::read_to_string(&args.verdicts)
        .with_context(|| format!("reading {}", args.verdicts.display()))?;
    let gold: BTreeMap<String, Option<u8>> = load_prompts(&args.labels)?
        .into_iter()
        .map(|r| (r.id, r.label))
        .collect();

    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let verdict: VerdictRow = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: bad verdict row", args.verdicts.display(), i + 1))?;
        let label = gold
            .get(&verdict.id)
            .ok_or_else(|| anyhow!("verdict id '{}' missing from label file", verdict.id))?
            .ok_or_else(|| anyhow!("record '{}' has no gold label", verdict.id))?;
        pairs.push((verdict.label, label));
    }
    if pairs.is_empty() {
        bail!("{} contains no verdicts", args.verdicts.display());
    }

    let counts = ConfusionCounts::tally(pairs);
    let prf = precision_recall_f1(&counts);
    let report = EvalReport {
        counts,
        accuracy: accuracy(&counts)?,
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
    };
    let rendered = match args.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Tsv => {
            let mut t = String::from("tp\tfp\ttn\tfn\taccuracy\tprecision\trecall\tf1\n");
            t.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.2}\t{}\t{}\t{}\n",
                counts.tp,
                counts.fp,
                counts.tn,
                counts.fn_,
                report.accuracy,
                fmt_opt(report.precision, 2),
                fmt_opt(report.recall, 2),
                fmt_opt(report.f1, 2),
            ));
            t
        }
    };
    write_output(&args.output, &rendered)
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

#[derive(Args)]
struct DiagnoseArgs {
    /// Embedding pool (binary or JSONL embedding format).
    #[arg(long)]
    embeddings: PathBuf,
    /// Safety sidecar JSONL: {"id": ..., "safe": bool} per pool entry.
    #[arg(long)]
    labels: PathBuf,
    /// Second embedding pool for representation-similarity (CKA) scoring;
    /// must cover the same ids.
    #[arg(long)]
    compare: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    #[arg(long, default_value = "-")]
    output: String,
}

fn sorted_records(mut set: EmbeddingSet) -> Vec<EmbeddingRecord> {
    set.records.sort_by(|a, b| a.id.cmp(&b.id));
    set.records
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<()> {
    let set = load_embeddings(&args.embeddings)
        .with_context(|| format!("loading embeddings {}", args.embeddings.display()))?;
    let curvature = set.curvature.clone();
    let records = sorted_records(set);
    let safety = load_safety_sidecar(&args.labels)?;

    let mut labels = Vec::with_capacity(records.len());
    for record in &records {
        let safe = safety
            .get(&record.id)
            .ok_or_else(|| anyhow!("no safety label for embedding '{}'", record.id))?;
        labels.push(usize::from(!safe));
    }
    let points: Vec<HyperbolicPoint> = records.iter().map(|r| r.point.clone()).collect();
    let dm = DistanceMatrix::from_points(&points, &curvature)?;

    let cka = match &args.compare {
        Some(path) => {
            let other = sorted_records(
                load_embeddings(path).with_context(|| format!("loading {}", path.display()))?,
            );
            let other_ids: Vec<&str> = other.iter().map(|r| r.id.as_str()).collect();
            let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
            if ids != other_ids {
                bail!("--compare pool must cover exactly the same ids");
            }
            let x: Vec<Vec<f64>> = records.iter().map(|r| r.point.spatial().to_vec()).collect();
            let y: Vec<Vec<f64>> = other.iter().map(|r| r.point.spatial().to_vec()).collect();
            Some(linear_cka(&x, &y)?)
        }
        None => None,
    };

    let report = diagnostics_report(&dm, &labels, cka)?;
    let rendered = match args.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Tsv => {
            let mut t = String::from("metric\tvalue\n");
            t.push_str(&format!("silhouette\t{}\n", fmt_opt(report.silhouette, 6)));
            t.push_str(&format!(
                "inter_intra_ratio\t{}\n",
                fmt_opt(report.inter_intra_ratio, 6)
            ));
            t.push_str(&format!("knn5_purity\t{}\n", fmt_opt(report.knn5_purity, 6)));
            t.push_str(&format!(
                "cluster_purity\t{}\n",
                fmt_opt(report.cluster_purity, 6)
            ));
            t.push_str(&format!("cka\t{}\n", fmt_opt(report.cka, 6)));
            t
        }
    };
    write_output(&args.output, &rendered)
}

// ---------------------------------------------------------------------------
// sweep-nu
// ---------------------------------------------------------------------------

#[derive(Args)]
struct SweepNuArgs {
    /// Benign training prompts (JSONL).
    #[arg(long)]
    train: PathBuf,
    /// Labeled evaluation prompts (JSONL).
    #[arg(long)]
    eval: PathBuf,
    #[arg(long)]
    encoder: PathBuf,
    /// Comma-separated slack fractions, each in (0, 1].
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    #[arg(long, default_value = "-")]
    output: String,
}

fn cmd_sweep_nu(args: SweepNuArgs) -> Result<()> {
    let params = load_encoder(&args.encoder)?;
    let train = load_prompts(&args.train)?;
    let eval_records = load_prompts(&args.eval)?;

    let mut train_distances = Vec::with_capacity(train.len());
    for record in &train {
        let point = encode_text(&record.text, &params)?;
        train_distances.push(distance_to_origin(&point, &params.curvature)?);
    }
    let mut eval_pairs = Vec::with_capacity(eval_records.len());
    for record in &eval_records {
        let label = record
            .label
            .ok_or_else(|| anyhow!("eval record '{}' has no label", record.id))?;
        let point = encode_text(&record.text, &params)?;
        eval_pairs.push((distance_to_origin(&point, &params.curvature)?, label));
    }

    let rows = nu_sweep(&train_distances, &eval_pairs, &args.grid)?;
    let rendered = match args.format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Tsv => {
            let mut t = String::from("nu\tradius\tbenign_acc\tmalicious_acc\tf1\n");
            for row in &rows {
                t.push_str(&format!(
                    "{:.6}\t{:.6}\t{}\t{}\t{}\n",
                    row.nu,
                    row.radius,
                    fmt_opt(row.benign_accuracy, 6),
                    fmt_opt(row.malicious_accuracy, 6),
                    fmt_opt(row.f1, 6),
                ));
            }
            t
        }
    };
    write_output(&args.output, &rendered)
}

// ---------------------------------------------------------------------------
// wordfreq
// ---------------------------------------------------------------------------

#[derive(Args)]
struct WordfreqArgs {
    /// Explanation JSONL produced by `explain`.
    #[arg(long)]
    input: PathBuf,
    /// Flagged words counted per prompt.
    #[arg(long, default_value_t = 2)]
    top_k: usize,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Deserialize)]
struct ExplainRowIn {
    top_words: Vec<String>,
}

fn cmd_wordfreq(args: WordfreqArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let mut lists = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: ExplainRowIn = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: bad explanation row", args.input.display(), i + 1))?;
        lists.push(row.top_words);
    }
    let rows = word_frequency_report(&lists, args.top_k)?;
    let rendered = match args.format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Tsv => {
            let mut t = String::from("word\tcount\n");
            for row in &rows {
                t.push_str(&format!("{}\t{}\n", row.word, row.count));
            }
            t
        }
    };
    write_output(&args.output, &rendered)
}

// ---------------------------------------------------------------------------
// retrieve
// ---------------------------------------------------------------------------

#[derive(Args)]
struct RetrieveArgs {
    /// Embedding pool to rank.
    #[arg(long)]
    pool: PathBuf,
    /// Query prompt, embedded with --encoder.
    #[arg(long)]
    query_text: String,
    #[arg(long)]
    encoder: PathBuf,
    /// Optional safety sidecar; adds a safe column and the safe@k score.
    #[arg(long)]
    safety: Option<PathBuf>,
    /// Depth for the safe@k score.
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Serialize)]
struct RetrieveItem {
    rank: usize,
    id: String,
    cosine: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    safe: Option<bool>,
}

#[derive(Serialize)]
struct RetrieveReport {
    ranking: Vec<RetrieveItem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    safe_at_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    safe_at_k_truncated: Option<bool>,
}

fn cmd_retrieve(args: RetrieveArgs) -> Result<()> {
    let params = load_encoder(&args.encoder)?;
    let set = load_embeddings(&args.pool)
        .with_context(|| format!("loading pool {}", args.pool.display()))?;
    if set.curvature != params.curvature {
        bail!("pool curvature does not match the encoder's");
    }
    let query = encode_text(&args.query_text, &params)?;
    let ranked_ids = rank_by_cosine(&query, &set.records)?;

    let by_id: BTreeMap<&str, &EmbeddingRecord> =
        set.records.iter().map(|r| (r.id.as_str(), r)).collect();
    let safety = match &args.safety {
        Some(path) => Some(load_safety_sidecar(path)?),
        None => None,
    };

    let mut ranking = Vec::with_capacity(ranked_ids.len());
    for (i, id) in ranked_ids.iter().enumerate() {
        let record = by_id[id.as_str()];
        let safe = match &safety {
            Some(map) => Some(
                *map.get(id)
                    .ok_or_else(|| anyhow!("no safety label for pool entry '{}'", id))?,
            ),
            None => None,
        };
        ranking.push(RetrieveItem {
            rank: i + 1,
            id: id.clone(),
            cosine: ambient_cosine(&query, &record.point)?,
            safe,
        });
    }
    let (safe_score, safe_truncated) = match &safety {
        Some(map) => {
            let s = safe_at_k(std::slice::from_ref(&ranked_ids), map, args.k)?;
            (Some(s.value), Some(s.truncated))
        }
        None => (None, None),
    };

    let report = RetrieveReport {
        ranking,
        safe_at_k: safe_score,
        safe_at_k_truncated: safe_truncated,
    };
    let rendered = match args.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Tsv => {
            let mut t = if safety.is_some() {
                String::from("rank\tid\tcosine\tsafe\n")
            } else {
                String::from("rank\tid\tcosine\n")
            };
            for item in &report.ranking {
                match item.safe {
                    Some(safe) => t.push_str(&format!(
                        "{}\t{}\t{:.6}\t{}\n",
                        item.rank, item.id, item.cosine, safe
                    )),
                    None => {
                        t.push_str(&format!("{}\t{}\t{:.6}\n", item.rank, item.id, item.cosine))
                    }
                }
            }
            t
        }
    };
    write_output(&args.output, &rendered)
}

// ---------------------------------------------------------------------------
// gen-corpus
// ---------------------------------------------------------------------------

#[derive(Args)]
struct GenCorpusArgs {
    /// Directory to populate (created if missing).
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    n_train: usize,
    #[arg(long, default_value_t = 250)]
    n_val_benign: usize,
    #[arg(long, default_value_t = 125)]
    n_val_strong: usize,
    #[arg(long, default_value_t = 125)]
    n_val_mild: usize,
    #[arg(long, default_value_t = 250)]
    n_test_pairs: usize,
}

fn write_jsonl_records(path: &Path, records: &[DatasetRecord]) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn cmd_gen_corpus(args: GenCorpusArgs) -> Result<()> {
    let config = FixtureConfig {
        seed: args.seed,
        n_train: args.n_train,
        n_val_benign: args.n_val_benign,
        n_val_strong: args.n_val_strong,
        n_val_mild: args.n_val_mild,
        n_test_pairs: args.n_test_pairs,
    };
    let bundle = build_corpus(&config);
    let dir = &args.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut encoder_json = serde_json::to_string_pretty(&bundle.params)?;
    encoder_json.push('\n');
    fs::write(dir.join("encoder.json"), encoder_json)?;

    write_jsonl_records(&dir.join("train.jsonl"), &bundle.train)?;
    write_jsonl_records(&dir.join("val.jsonl"), &bundle.val)?;
    write_jsonl_records(&dir.join("test.jsonl"), &bundle.test)?;

    let mut thesaurus_json = serde_json::to_string_pretty(&bundle.thesaurus)?;
    thesaurus_json.push('\n');
    fs::write(dir.join("thesaurus.json"), thesaurus_json)?;

    let mut rewrites_json = serde_json::to_string_pretty(&bundle.llm_rewrites)?;
    rewrites_json.push('\n');
    fs::write(dir.join("mock_rewrites.json"), rewrites_json)?;

    // The unsafe-word list spans both lexicon tiers.
    let mut lexicon_txt = String::new();
    for word in bundle.strong_words.iter().chain(&bundle.mild_words) {
        lexicon_txt.push_str(word);
        lexicon_txt.push('\n');
    }
    fs::write(dir.join("nsfw_lexicon.txt"), lexicon_txt)?;

    let concepts = serde_json::json!({
        "far": bundle.far_concept,
        "neutral": bundle.neutral_concept,
    });
    fs::write(
        dir.join("concepts.json"),
        serde_json::to_string_pretty(&concepts)? + "\n",
    )?;

    // Validation split as an embedding pool with a safety sidecar, for the
    // diagnostics and retrieval commands.
    let mut pool_records = Vec::with_capacity(bundle.val.len());
    let mut sidecar = String::new();
    for record in &bundle.val {
        let point = encode_text(&record.text, &bundle.params)?;
        pool_records.push(EmbeddingRecord {
            id: record.id.clone(),
            point,
        });
        let safe = record.label == Some(0);
        sidecar.push_str(&serde_json::to_string(&SafetyRow {
            id: record.id.clone(),
            safe,
        })?);
        sidecar.push('\n');
    }
    let pool = EmbeddingSet {
        curvature: bundle.params.curvature.clone(),
        records: pool_records,
    };
    store_embeddings(&pool, &dir.join("val_embeddings.bin"), EmbedFormat::Binary)?;
    fs::write(dir.join("val_labels.jsonl"), sidecar)?;

    eprintln!(
        "corpus written to {} ({} train / {} val / {} test records)",
        dir.display(),
        bundle.train.len(),
        bundle.val.len(),
        bundle.test.len()
    );
    Ok(())
}
