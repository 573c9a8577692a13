//! The `mcqdebias` command line.
//!
//! Every command writes its artifacts plus a `run_manifest.json` into the
//! `--out` directory. Exit codes: 0 success, 1 other failure, 2 schema or
//! validation error, 3 insufficient data, 4 provider failure, 5 configuration
//! mismatch.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analyzer;
use crate::builder::{
    build_similarity_tables, generate_items, validate_corpus, BuildConfig, ClassRecord,
    EmbeddingRecord, EmbeddingSet,
};
use crate::debias::{
    all_content_free_prompts, calibrate, evaluate, split_holdout, BiasEstimate, DebiasConfig,
    EvalOutcome,
};
use crate::error::{Error, Result};
use crate::jsonl::{read_json, read_jsonl, read_jsonl_checked, to_jsonl_bytes, write_bytes};
use crate::ordering::{apply_ordering, IdentifierAlphabet, OrderingScheme};
use crate::providers::{LogitProvider, LogitRecord, ProviderSpec, SyntheticProvider};
use crate::seeding::sha256_hex;
use crate::simbias::synth_logits;
use crate::types::{EvalRecord, McqItem, Variant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_INSUFFICIENT: i32 = 3;
pub const EXIT_PROVIDER: i32 = 4;
pub const EXIT_CONFIG_MISMATCH: i32 = 5;

pub const RUN_MANIFEST: &str = "run_manifest.json";

#[derive(Debug, Parser)]
#[command(
    name = "mcqdebias",
    version,
    about = "Tiered MCQ benchmarks, selection-bias measurement and logit debiasing"
)]
pub struct Cli {
    /// Worker threads for per-item work (default: available processors).
    #[arg(long, global = true)]
    pub parallel: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a tiered MCQ dataset from a class corpus and description embeddings.
    Build(BuildArgs),
    /// Fetch description embeddings for a corpus from a provider.
    Embed(EmbedArgs),
    /// Evaluate a dataset under one or more orderings without correction.
    Eval(EvalArgs),
    /// Estimate bias vectors per identifier alphabet.
    Calibrate(CalibrateArgs),
    /// Evaluate with raw and bias-corrected logits.
    DebiasEval(DebiasEvalArgs),
    /// Aggregate evaluation records into report tables.
    Analyze(AnalyzeArgs),
    /// Produce logit records from the synthetic biased model.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Build configuration JSON; defaults apply to omitted fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// `fixture:PATH` or `http:URL`.
    #[arg(long)]
    pub provider: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// `fixture:PATH`, `http:URL` or `synth:PARAMS_PATH`.
    #[arg(long)]
    pub provider: String,
    /// Comma-separated ordering literals, e.g. `ABCD,DCBA,1234,4321`.
    #[arg(long, default_value = "ABCD,DCBA")]
    pub orderings: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct DebiasFlags {
    /// Debias configuration JSON; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Fraction of the dataset used for the contextual bias vector.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Number of content-free prompts for the general bias vector.
    #[arg(long)]
    pub n_general: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exclude contextual calibration items from evaluation.
    #[arg(long)]
    pub holdout: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub provider: String,
    /// Comma-separated alphabets: `alphabetic`, `numeric`.
    #[arg(long, default_value = "alphabetic")]
    pub alphabets: String,
    #[command(flatten)]
    pub debias: DebiasFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DebiasEvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub provider: String,
    #[arg(long, default_value = "ABCD,DCBA")]
    pub orderings: String,
    /// Precomputed bias estimates, one per alphabet. Without them calibration
    /// runs inline.
    #[arg(long = "bias")]
    pub bias: Vec<PathBuf>,
    #[command(flatten)]
    pub debias: DebiasFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Evaluation record files (JSON lines).
    #[arg(long, required = true, num_args = 1..)]
    pub records: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Synthetic model parameters JSON.
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "ABCD,DCBA")]
    pub orderings: String,
    /// Also emit logits for every content-free calibration prompt, so the
    /// output can serve as a fixture for `calibrate`.
    #[arg(long)]
    pub with_content_free: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub toolkit_version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub seeds: BTreeMap<String, u64>,
    pub notes: Vec<String>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn hash_file(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// Collects outputs as they are written and finally emits the run manifest.
struct Run {
    command: &'static str,
    out_dir: PathBuf,
    started: u128,
    config: serde_json::Value,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    seeds: BTreeMap<String, u64>,
    notes: Vec<String>,
}

impl Run {
    fn start(command: &'static str, out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        Ok(Run {
            command,
            out_dir: out_dir.to_path_buf(),
            started: now_ms(),
            config: serde_json::Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seeds: BTreeMap::new(),
            notes: Vec::new(),
        })
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(hash_file(path)?);
        Ok(())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        write_bytes(&path, bytes)?;
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    fn write_jsonl<T: Serialize>(&mut self, name: &str, values: &[T]) -> Result<PathBuf> {
        self.write(name, &to_jsonl_bytes(values)?)
    }

    fn finish(self) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            seeds: self.seeds,
            notes: self.notes,
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
        };
        crate::jsonl::write_json(&self.out_dir.join(RUN_MANIFEST), &manifest)
    }
}

/// Maps an error to the documented exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Schema { .. }
        | Error::Validation(_)
        | Error::Json(_)
        | Error::MissingEmbedding { .. } => EXIT_SCHEMA,
        Error::InsufficientCandidates { .. } => EXIT_INSUFFICIENT,
        Error::Provider(_) | Error::Calibration { .. } | Error::ProviderErrorRate { .. } => {
            EXIT_PROVIDER
        }
        Error::ConfigMismatch(_) => EXIT_CONFIG_MISMATCH,
        Error::Internal(_) | Error::Io { .. } => EXIT_OTHER,
    }
}

pub fn run_from_env() -> i32 {
    run(std::env::args_os())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let threads = cli
        .parallel
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Build(a) => cmd_build(&a),
        Command::Embed(a) => cmd_embed(&a, threads),
        Command::Eval(a) => cmd_eval(&a, threads),
        Command::Calibrate(a) => cmd_calibrate(&a, threads),
        Command::DebiasEval(a) => cmd_debias_eval(&a, threads),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    })
}

fn read_corpus(path: &Path) -> Result<Vec<ClassRecord>> {
    let corpus = read_jsonl_checked(path, ClassRecord::validate)?;
    validate_corpus(&corpus)?;
    Ok(corpus)
}

fn read_dataset(path: &Path) -> Result<Vec<McqItem>> {
    let items: Vec<McqItem> = read_jsonl_checked(path, McqItem::validate)?;
    if items.is_empty() {
        return Err(Error::validation(format!(
            "{} contains no items",
            path.display()
        )));
    }
    Ok(items)
}

fn provider(spec: &str, threads: usize) -> Result<Arc<dyn LogitProvider>> {
    spec.parse::<ProviderSpec>()?.logit_provider(threads)
}

fn provider_input(run: &mut Run, spec: &str) -> Result<()> {
    match spec.parse::<ProviderSpec>()? {
        ProviderSpec::Fixture(p) | ProviderSpec::Synthetic(p) => run.input(&p),
        ProviderSpec::Http(url) => {
            run.notes.push(format!("provider endpoint {url}"));
            Ok(())
        }
    }
}

fn cmd_build(a: &BuildArgs) -> Result<()> {
    let mut run = Run::start("build", &a.out)?;
    let mut config: BuildConfig = match &a.config {
        Some(p) => {
            run.input(p)?;
            read_json(p)?
        }
        None => BuildConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    run.input(&a.corpus)?;
    run.input(&a.embeddings)?;
    let corpus = read_corpus(&a.corpus)?;
    let embeddings = EmbeddingSet::from_records(read_jsonl::<EmbeddingRecord>(&a.embeddings)?)?;
    let tables = build_similarity_tables(&corpus, &embeddings)?;
    let dataset = generate_items(&corpus, &tables, &config)?;

    run.write("dataset.jsonl", &dataset.dataset_bytes()?)?;
    run.write_json("manifest.json", &dataset.manifest)?;
    run.config = serde_json::to_value(&config)?;
    run.seeds.insert("build".into(), config.seed);
    run.notes.extend(dataset.manifest.warnings.iter().cloned());
    println!(
        "built {} items ({} classes); tier statistics: {:?}",
        dataset.items.len(),
        corpus.len(),
        dataset.manifest.tier_statistics.verdict
    );
    run.finish()
}

fn cmd_embed(a: &EmbedArgs, threads: usize) -> Result<()> {
    let mut run = Run::start("embed", &a.out)?;
    run.input(&a.corpus)?;
    provider_input(&mut run, &a.provider)?;
    let corpus = read_corpus(&a.corpus)?;
    let embedder = a
        .provider
        .parse::<ProviderSpec>()?
        .embedding_provider(threads)?;
    let mut records = Vec::with_capacity(corpus.len() * 2);
    for class in &corpus {
        for variant in Variant::ALL {
            let vector = embedder.fetch_embedding(class.description(variant), variant)?;
            records.push(EmbeddingRecord {
                class_id: class.class_id.clone(),
                variant,
                vector,
            });
        }
    }
    records.sort_by(|x, y| (&x.class_id, x.variant).cmp(&(&y.class_id, y.variant)));
    run.write_jsonl("embeddings.jsonl", &records)?;
    run.config = serde_json::json!({ "provider": a.provider });
    println!("embedded {} descriptions", records.len());
    run.finish()
}

/// Writes records, logits and failures, then applies the error-rate gate so
/// partial results are on disk even when the run fails.
fn write_outcome(run: &mut Run, outcome: &EvalOutcome) -> Result<()> {
    run.write_jsonl("records.jsonl", &outcome.records)?;
    run.write_jsonl("logits.jsonl", &outcome.logits)?;
    run.write_jsonl("failures.jsonl", &outcome.failures)?;
    if !outcome.failures.is_empty() {
        run.notes.push(format!(
            "{} of {} provider requests failed",
            outcome.failures.len(),
            outcome.attempted()
        ));
    }
    Ok(())
}

fn finish_eval(mut run: Run, outcome: &EvalOutcome) -> Result<()> {
    write_outcome(&mut run, outcome)?;
    let gate = outcome.check_error_rate();
    run.finish()?;
    gate?;
    println!(
        "evaluated {} records ({} failures)",
        outcome.records.len(),
        outcome.failures.len()
    );
    Ok(())
}

fn cmd_eval(a: &EvalArgs, threads: usize) -> Result<()> {
    let mut run = Run::start("eval", &a.out)?;
    let orderings = OrderingScheme::parse_list(&a.orderings)?;
    run.input(&a.dataset)?;
    provider_input(&mut run, &a.provider)?;
    let items = read_dataset(&a.dataset)?;
    let provider = provider(&a.provider, threads)?;
    let mut outcome = EvalOutcome::default();
    for ordering in &orderings {
        outcome.merge(evaluate(provider.as_ref(), &items, ordering, None)?);
    }
    run.config = serde_json::json!({
        "provider": a.provider,
        "provider_tag": provider.tag(),
        "orderings": orderings.iter().map(|o| o.name.clone()).collect::<Vec<_>>(),
    });
    finish_eval(run, &outcome)
}

fn parse_alphabets(list: &str) -> Result<Vec<IdentifierAlphabet>> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let alphabet = IdentifierAlphabet::ALL
            .into_iter()
            .find(|a| a.as_str() == part)
            .ok_or_else(|| Error::validation(format!("unknown alphabet {part:?}")))?;
        if !out.contains(&alphabet) {
            out.push(alphabet);
        }
    }
    if out.is_empty() {
        return Err(Error::validation("no alphabets given"));
    }
    Ok(out)
}

fn debias_config(run: &mut Run, flags: &DebiasFlags) -> Result<DebiasConfig> {
    let mut config: DebiasConfig = match &flags.config {
        Some(p) => {
            run.input(p)?;
            read_json(p)?
        }
        None => DebiasConfig::default(),
    };
    if let Some(v) = flags.alpha {
        config.alpha = v;
    }
    if let Some(v) = flags.tau {
        config.tau = v;
    }
    if let Some(v) = flags.fraction {
        config.contextual_fraction = v;
    }
    if let Some(v) = flags.n_general {
        config.n_general = v;
    }
    if let Some(v) = flags.seed {
        config.seed = v;
    }
    if flags.holdout {
        config.contextual_holdout = true;
    }
    config.validate()?;
    run.seeds.insert("debias".into(), config.seed);
    Ok(config)
}

fn bias_file_name(alphabet: IdentifierAlphabet) -> String {
    format!("bias-{alphabet}.json")
}

fn cmd_calibrate(a: &CalibrateArgs, threads: usize) -> Result<()> {
    let mut run = Run::start("calibrate", &a.out)?;
    let alphabets = parse_alphabets(&a.alphabets)?;
    let config = debias_config(&mut run, &a.debias)?;
    run.input(&a.dataset)?;
    provider_input(&mut run, &a.provider)?;
    let items = read_dataset(&a.dataset)?;
    let provider = provider(&a.provider, threads)?;
    for alphabet in alphabets {
        let estimate = calibrate(provider.as_ref(), &items, alphabet, &config)?;
        estimate.check_invariants()?;
        run.write_json(&bias_file_name(alphabet), &estimate)?;
        println!(
            "{alphabet}: b_ensemble = {:?} (n = {}, m = {})",
            estimate.b_ensemble.values(),
            estimate.n_used,
            estimate.m_used
        );
    }
    run.config = serde_json::to_value(&config)?;
    run.finish()
}

fn cmd_debias_eval(a: &DebiasEvalArgs, threads: usize) -> Result<()> {
    let mut run = Run::start("debias-eval", &a.out)?;
    let orderings = OrderingScheme::parse_list(&a.orderings)?;
    run.input(&a.dataset)?;
    provider_input(&mut run, &a.provider)?;
    let items = read_dataset(&a.dataset)?;
    let provider = provider(&a.provider, threads)?;

    let mut estimates: BTreeMap<IdentifierAlphabet, BiasEstimate> = BTreeMap::new();
    let config = if a.bias.is_empty() {
        let config = debias_config(&mut run, &a.debias)?;
        for ordering in &orderings {
            if let std::collections::btree_map::Entry::Vacant(slot) =
                estimates.entry(ordering.alphabet)
            {
                let est = calibrate(provider.as_ref(), &items, ordering.alphabet, &config)?;
                run.write_json(&bias_file_name(ordering.alphabet), &est)?;
                slot.insert(est);
            }
        }
        Some(config)
    } else {
        for path in &a.bias {
            run.input(path)?;
            let est: BiasEstimate = read_json(path)?;
            est.check_invariants()?;
            if estimates.insert(est.alphabet, est).is_some() {
                return Err(Error::ConfigMismatch(format!(
                    "more than one bias estimate given for one alphabet ({})",
                    path.display()
                )));
            }
        }
        None
    };

    for ordering in &orderings {
        if !estimates.contains_key(&ordering.alphabet) {
            let have: Vec<String> = estimates.keys().map(|a| a.to_string()).collect();
            return Err(Error::ConfigMismatch(format!(
                "ordering {} uses {} identifiers but bias estimates cover [{}]",
                ordering.name,
                ordering.alphabet,
                have.join(", ")
            )));
        }
    }

    let mut outcome = EvalOutcome::default();
    let mut held_out = std::collections::BTreeSet::new();
    for ordering in &orderings {
        let est = &estimates[&ordering.alphabet];
        let mut correction = est.correction();
        if let Some(c) = &config {
            correction.alpha = c.alpha;
            correction.tau = c.tau;
        } else {
            let mut check = est.config.clone();
            check.alpha = a.debias.alpha.unwrap_or(correction.alpha);
            check.tau = a.debias.tau.unwrap_or(correction.tau);
            check.validate()?;
            correction.alpha = check.alpha;
            correction.tau = check.tau;
        }
        let holdout = a.debias.holdout || est.config.contextual_holdout;
        let (eval_items, held) = split_holdout(&items, est, holdout);
        held_out.extend(held);
        outcome.merge(evaluate(
            provider.as_ref(),
            &eval_items,
            ordering,
            Some(&correction),
        )?);
    }
    if !held_out.is_empty() {
        run.notes.push(format!(
            "{} contextual calibration items held out of evaluation",
            held_out.len()
        ));
        run.write_jsonl("held_out.jsonl", &held_out.into_iter().collect::<Vec<_>>())?;
    }
    run.config = serde_json::json!({
        "provider": a.provider,
        "provider_tag": provider.tag(),
        "orderings": orderings.iter().map(|o| o.name.clone()).collect::<Vec<_>>(),
        "bias": estimates.values().collect::<Vec<_>>(),
    });
    finish_eval(run, &outcome)
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<()> {
    let mut run = Run::start("analyze", &a.out)?;
    let mut records: Vec<EvalRecord> = Vec::new();
    for path in &a.records {
        run.input(path)?;
        records.extend(read_jsonl::<EvalRecord>(path)?);
    }
    if records.is_empty() {
        return Err(Error::validation("no evaluation records to analyze"));
    }
    let rows = analyzer::aggregate_report(&records)?;
    run.write_jsonl("report.jsonl", &rows)?;
    let text = analyzer::render_text(&rows);
    run.write("report.txt", text.as_bytes())?;
    run.write("distributions.csv", &analyzer::distributions_csv(&rows)?)?;
    run.config = serde_json::json!({ "records": a.records });
    print!("{text}");
    run.finish()
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut run = Run::start("simulate", &a.out)?;
    let mut orderings = OrderingScheme::parse_list(&a.orderings)?;
    let mut alphabets: Vec<IdentifierAlphabet> = orderings.iter().map(|o| o.alphabet).collect();
    alphabets.sort();
    alphabets.dedup();
    if a.with_content_free {
        // contextual calibration presents items in the identity ordering
        for &alphabet in &alphabets {
            let identity = OrderingScheme::identity(alphabet);
            if !orderings.contains(&identity) {
                orderings.push(identity);
            }
        }
    }
    run.input(&a.params)?;
    run.input(&a.dataset)?;
    let model = SyntheticProvider::load(&a.params)?;
    let items = read_dataset(&a.dataset)?;
    let tag = model.tag().to_string();
    let record = |p: crate::types::PresentedItem| LogitRecord {
        logits: synth_logits(&p, model.params()),
        item_id: p.item_id,
        ordering_name: p.ordering_name,
        provider_tag: tag.clone(),
        latency_ms: None,
    };
    let mut records = Vec::new();
    for ordering in &orderings {
        records.extend(items.iter().map(|i| record(apply_ordering(i, ordering))));
    }
    if a.with_content_free {
        for alphabet in alphabets {
            records.extend(all_content_free_prompts(alphabet).into_iter().map(record));
        }
    }
    records.sort_by(|x, y| (&x.item_id, &x.ordering_name).cmp(&(&y.item_id, &y.ordering_name)));
    run.write_jsonl("logits.jsonl", &records)?;
    run.config = serde_json::to_value(model.params())?;
    run.seeds.insert("synthetic".into(), model.params().seed);
    println!("simulated {} logit records", records.len());
    run.finish()
}
