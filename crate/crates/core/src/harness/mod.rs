//! Synthetic corpora, baseline models and the experiment loop.

pub mod experiment;
pub mod model;
pub mod synth;

pub use experiment::{
    emit_plot_data, load_summary, run_experiment, significance_key, system_name, write_bundle,
    ExperimentBundle, ExperimentConfig, ExperimentSummary, RunRecord, SummaryRow, TrainingEvent,
};
pub use model::{train_model, train_model_logged, LoggedCorpus, Model, ModelSpec};
pub use synth::{
    generate_synthetic, generate_synthetic_with_provenance, synth_boundaries, SynthConfig, SynthCorpus,
};

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::metrics::MetricsError;
use crate::splitter::SplitError;
use crate::stats::StatsError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("train set `{0}` is empty")]
    EmptyTrain(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
