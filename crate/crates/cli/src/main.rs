use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use codesum_eval::corpus::{load_corpus, save_corpus, subtokenize, CorpusError, SampleSet, Task};
use codesum_eval::harness::{
    emit_plot_data, generate_synthetic, load_summary, run_experiment, train_model, write_bundle,
    ExperimentConfig, HarnessError, ModelSpec, SynthConfig,
};
use codesum_eval::ingest::{compute_stats, filter_corpus, mask_corpus, FilterConfig, IngestError};
use codesum_eval::io::{write_atomic, write_json_atomic};
use codesum_eval::metrics::{evaluate_set, metric_names, MetricReport, MetricsError};
use codesum_eval::miner::{mine, MinerConfig, MinerError};
use codesum_eval::splitter::{
    run_pipeline, validate_artifacts, DedupConfig, DedupMode, Manifest, Methodology, SplitArtifacts,
    SplitConfig, SplitError,
};
use codesum_eval::stats::{compare_reports, BootstrapConfig, StatsError};

#[derive(Parser)]
#[command(name = "codesum", version, about = "Methodology-aware splitting and evaluation for code summarization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract documented methods from git snapshots at each cutoff.
    Mine(MineArgs),
    /// Drop samples failing the language, length, body and comment filters.
    Filter(FilterArgs),
    /// Print dataset statistics.
    Stats(StatsArgs),
    /// Build train/val/test sets for every methodology and write a manifest.
    Split(SplitArgs),
    /// Re-verify a manifest against its corpus.
    CleanCheck(CleanCheckArgs),
    /// Write baseline predictions for one set.
    Predict(PredictArgs),
    /// Score predictions against one set.
    Eval(EvalArgs),
    /// Significance groups over reports on the same set.
    Compare(CompareArgs),
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
    /// Split, train baselines, evaluate and test significance over several seeds.
    Experiment(ExperimentArgs),
    /// Write plot-ready CSV from an experiment summary.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    CommentGeneration,
    MethodNaming,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::CommentGeneration => Task::CommentGeneration,
            TaskArg::MethodNaming => Task::MethodNaming,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum DedupArg {
    ExactPair,
    SameCode,
    SameNl,
    Sim90,
}

impl From<DedupArg> for DedupMode {
    fn from(d: DedupArg) -> DedupMode {
        match d {
            DedupArg::ExactPair => DedupMode::ExactPair,
            DedupArg::SameCode => DedupMode::SameCode,
            DedupArg::SameNl => DedupMode::SameNl,
            DedupArg::Sim90 => DedupMode::Sim90,
        }
    }
}

#[derive(Args)]
struct MineArgs {
    /// Repository working copy; repeat for several projects.
    #[arg(long = "repo", required = true)]
    repos: Vec<PathBuf>,
    /// Snapshot cutoff date (YYYY-MM-DD); repeat in increasing order.
    #[arg(long = "cutoff", required = true)]
    cutoffs: Vec<NaiveDate>,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the mining report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "comment-generation")]
    task: TaskArg,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    max_code_chars: usize,
    /// Convert to method naming: mask the name in code, target its subtokens.
    #[arg(long)]
    mask_names: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SplitFlags {
    #[arg(long, env = "CODESUM_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "2019-01-01")]
    tau2: NaiveDate,
    #[arg(long, default_value = "2020-01-01")]
    tau1: NaiveDate,
    #[arg(long, default_value = "2021-01-01")]
    tau: NaiveDate,
    /// Train, val and test ratios.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.7, 0.1, 0.2])]
    ratios: Vec<f64>,
    #[arg(long, value_enum, default_value = "exact-pair")]
    dedup: DedupArg,
    /// Similarity threshold for sim90.
    #[arg(long, default_value_t = 0.9)]
    threshold: f64,
}

impl SplitFlags {
    fn config(&self) -> SplitConfig {
        let mut cfg = SplitConfig::new(self.tau2, self.tau1, self.tau, self.seed);
        cfg.r_x = self.ratios[0];
        cfg.r_y = self.ratios[1];
        cfg.r_z = self.ratios[2];
        cfg.dedup = DedupConfig {
            mode: self.dedup.into(),
            threshold: self.threshold,
        };
        cfg
    }
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Manifest path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    flags: SplitFlags,
}

#[derive(Args)]
struct CleanCheckArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Methodology whose train set the model learns from (MP, CP or T).
    #[arg(long)]
    train_on: String,
    /// Set to predict, e.g. `MP-T/testc`.
    #[arg(long)]
    set: String,
    #[arg(long, default_value = "retrieval")]
    model: String,
    /// One prediction per line.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    set: String,
    /// One prediction per line, in set order.
    #[arg(long)]
    predictions: PathBuf,
    /// Model name recorded in the report.
    #[arg(long)]
    model: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct BootstrapFlags {
    #[arg(long, default_value_t = 10_000)]
    resamples: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long = "bootstrap-seed", env = "CODESUM_SEED", default_value_t = 0)]
    bootstrap_seed: u64,
}

impl BootstrapFlags {
    fn config(&self) -> BootstrapConfig {
        BootstrapConfig {
            resamples: self.resamples,
            confidence: self.confidence,
            seed: self.bootstrap_seed,
        }
    }
}

#[derive(Args)]
struct CompareArgs {
    /// MetricReport JSON; repeat for each model.
    #[arg(long = "report", required = true)]
    reports: Vec<PathBuf>,
    /// Metrics to compare; defaults to the task's suite.
    #[arg(long = "metric")]
    metrics: Vec<String>,
    /// CSV table path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the full significance result as JSON.
    #[arg(long)]
    significance: Option<PathBuf>,
    #[command(flatten)]
    bootstrap: BootstrapFlags,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    projects: usize,
    #[arg(long, default_value_t = 20)]
    per_segment: usize,
    #[arg(long, default_value_t = 0.3)]
    drift: f64,
    #[arg(long, default_value_t = 0.0)]
    clone_rate: f64,
    #[arg(long, env = "CODESUM_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "comment-generation")]
    task: TaskArg,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Bundle directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "retrieval,frequency")]
    models: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    seeds: Vec<u64>,
    /// Also write plot CSVs here.
    #[arg(long)]
    plots: Option<PathBuf>,
    #[command(flatten)]
    split: SplitFlags,
    #[command(flatten)]
    bootstrap: BootstrapFlags,
}

#[derive(Args)]
struct PlotArgs {
    /// `summary.json` of an experiment bundle.
    #[arg(long)]
    summary: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// A failure reported as one `error[kind]: message` line.
struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self.message.split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error[{}]: {}", self.kind, one_line)
    }
}

macro_rules! kind_from {
    ($t:ty, $kind:literal) => {
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new($kind, e.to_string())
            }
        }
    };
}

kind_from!(CorpusError, "corpus");
kind_from!(IngestError, "ingest");
kind_from!(MinerError, "miner");
kind_from!(MetricsError, "metrics");
kind_from!(StatsError, "stats");

impl From<SplitError> for CliError {
    fn from(e: SplitError) -> Self {
        match e {
            SplitError::Invariant(v) => invariant_error(&v),
            other => CliError::new("split", other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Split(s) => s.into(),
            other => CliError::new("harness", other.to_string()),
        }
    }
}

fn invariant_error(violations: &[String]) -> CliError {
    let first = violations.first().map_or("", |s| s.as_str());
    CliError::new(
        "invariant",
        format!("{} violation(s); first: {first}", violations.len()),
    )
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::new("io", format!("{}: {e}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, text.as_bytes()).map_err(io_err(path))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn load_artifacts(path: &Path) -> Result<SplitArtifacts, CliError> {
    Ok(Manifest::load(path)?.into_artifacts()?)
}

fn named_set(artifacts: &SplitArtifacts, name: &str) -> Result<SampleSet, CliError> {
    artifacts
        .set_by_name(name)
        .cloned()
        .ok_or_else(|| CliError::new("usage", format!("unknown set `{name}`")))
}

fn parse_model(s: &str) -> Result<ModelSpec, CliError> {
    ModelSpec::parse(s).ok_or_else(|| {
        CliError::new(
            "usage",
            format!("unknown model `{s}` (expected retrieval, frequency or copy-oracle)"),
        )
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Mine(a) => {
            let mut cfg = MinerConfig::new(a.repos, a.cutoffs);
            cfg.task = a.task.into();
            let (corpus, report) = mine(&cfg)?;
            save_corpus(&corpus, &a.out)?;
            if let Some(p) = a.report {
                write_json_atomic(&p, &report).map_err(io_err(&p))?;
            }
        }
        Command::Filter(a) => {
            let corpus = load_corpus(&a.input)?;
            let cfg = FilterConfig {
                max_code_chars: a.max_code_chars,
                ..FilterConfig::default()
            };
            let (mut kept, report) = filter_corpus(&corpus, &cfg)?;
            if a.mask_names {
                kept = mask_corpus(&kept)?;
            }
            save_corpus(&kept, &a.out)?;
            if let Some(p) = a.report {
                write_json_atomic(&p, &report).map_err(io_err(&p))?;
            }
        }
        Command::Stats(a) => {
            let stats = compute_stats(&load_corpus(&a.input)?)?;
            let text = match a.format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&stats).expect("stats serialize");
                    s.push('\n');
                    s
                }
                Format::Csv => {
                    let mut s = String::from("statistic,value\n");
                    s.push_str(&format!("num_samples,{}\n", stats.num_samples));
                    s.push_str(&format!("avg_code_subtokens,{}\n", stats.avg_code_subtokens));
                    for (t, f) in &stats.code_subtokens_at_most {
                        s.push_str(&format!("code_subtokens_at_most_{t},{f}\n"));
                    }
                    s.push_str(&format!("avg_summary_subtokens,{}\n", stats.avg_summary_subtokens));
                    for (t, f) in &stats.summary_subtokens_at_most {
                        s.push_str(&format!("summary_subtokens_at_most_{t},{f}\n"));
                    }
                    s
                }
            };
            match a.out {
                Some(p) => write_text(&p, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Split(a) => {
            let corpus = load_corpus(&a.input)?;
            let artifacts = run_pipeline(&corpus, &a.flags.config())?;
            write_text(&a.out, &Manifest::from_artifacts(&artifacts).to_json())?;
        }
        Command::CleanCheck(a) => {
            let corpus = load_corpus(&a.input)?;
            let manifest = Manifest::load(&a.manifest)?;
            let artifacts = manifest.clone().into_artifacts()?;
            if artifacts.provenance.corpus_digest != corpus.digest() {
                return Err(CliError::new(
                    "invariant",
                    "manifest was built from a different corpus (digest mismatch)",
                ));
            }
            validate_artifacts(&artifacts, &corpus).map_err(|v| invariant_error(&v))?;
            let rebuilt = run_pipeline(&corpus, &artifacts.provenance.config)?;
            if Manifest::from_artifacts(&rebuilt).sets != manifest.sets {
                return Err(CliError::new(
                    "invariant",
                    "manifest differs from a fresh run with its recorded configuration",
                ));
            }
            println!("ok: {} sets verified", manifest.sets.len());
        }
        Command::Predict(a) => {
            let corpus = load_corpus(&a.input)?;
            let artifacts = load_artifacts(&a.manifest)?;
            let m = Methodology::parse(&a.train_on)
                .ok_or_else(|| CliError::new("usage", format!("unknown methodology `{}`", a.train_on)))?;
            let model = train_model(parse_model(&a.model)?, &artifacts.of(m).train, &corpus)?;
            let set = named_set(&artifacts, &a.set)?;
            let mut text = String::new();
            for p in model.predict_set(&set, &corpus)? {
                text.push_str(&p.join(" "));
                text.push('\n');
            }
            write_text(&a.out, &text)?;
        }
        Command::Eval(a) => {
            let corpus = load_corpus(&a.input)?;
            let artifacts = load_artifacts(&a.manifest)?;
            let set = named_set(&artifacts, &a.set)?;
            let preds: Vec<Vec<String>> = read_text(&a.predictions)?.lines().map(subtokenize).collect();
            let report = evaluate_set(&a.model, &preds, &set, &corpus)?;
            let text = match a.format {
                Format::Json => report.to_json(),
                Format::Csv => report.per_sample_csv()?,
            };
            write_text(&a.out, &text)?;
        }
        Command::Compare(a) => {
            let mut reports: Vec<MetricReport> = Vec::new();
            for p in &a.reports {
                let r = serde_json::from_str(&read_text(p)?)
                    .map_err(|e| CliError::new("usage", format!("{}: {e}", p.display())))?;
                reports.push(r);
            }
            let metrics = if a.metrics.is_empty() {
                metric_names(reports[0].task).iter().map(|s| s.to_string()).collect()
            } else {
                a.metrics
            };
            let refs: Vec<&MetricReport> = reports.iter().collect();
            let (result, table) = compare_reports(&refs, &metrics, &a.bootstrap.config())?;
            write_text(&a.out, &table)?;
            if let Some(p) = a.significance {
                write_text(&p, &result.to_json())?;
            }
        }
        Command::Synth(a) => {
            let mut cfg = SynthConfig::new(a.projects, a.per_segment, a.seed);
            cfg.vocab_drift = a.drift;
            cfg.clone_rate = a.clone_rate;
            cfg.task = a.task.into();
            save_corpus(&generate_synthetic(&cfg)?, &a.out)?;
        }
        Command::Experiment(a) => {
            let corpus = load_corpus(&a.input)?;
            let models = a.models.iter().map(|m| parse_model(m)).collect::<Result<Vec<_>, _>>()?;
            let mut cfg = ExperimentConfig::new(a.split.config(), models, a.bootstrap.config());
            cfg.seeds = a.seeds;
            let bundle = run_experiment(&corpus, &cfg)?;
            write_bundle(&bundle, &a.out)?;
            if let Some(dir) = a.plots {
                emit_plot_data(&bundle.summary, &dir)?;
            }
        }
        Command::Plot(a) => {
            let summary = load_summary(&a.summary)?;
            emit_plot_data(&summary, &a.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", CliError::new("usage", msg));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
