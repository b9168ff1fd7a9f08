//! End-to-end loop: split, train per methodology, evaluate, test significance.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::{train_model_logged, LoggedCorpus, ModelSpec};
use super::HarnessError;
use crate::corpus::{Corpus, Task};
use crate::io::write_atomic;
use crate::metrics::{evaluate_set, metric_names, MetricReport};
use crate::splitter::{run_pipeline, Manifest, Methodology, MethodologyPair, SplitConfig};
use crate::stats::{significance_groups_from_scores, BootstrapConfig, SignificanceResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Split settings; the seed is replaced by each entry of `seeds`.
    pub split: SplitConfig,
    pub models: Vec<ModelSpec>,
    pub bootstrap: BootstrapConfig,
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn new(split: SplitConfig, models: Vec<ModelSpec>, bootstrap: BootstrapConfig) -> Self {
        ExperimentConfig {
            split,
            models,
            bootstrap,
            seeds: vec![1, 2, 3],
        }
    }
}

/// One model trained on one methodology and scored on one set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub model: ModelSpec,
    pub trained_on: Methodology,
    pub eval_set: String,
    pub report: MetricReport,
}

/// Which ids a training call read, for auditing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingEvent {
    pub seed: u64,
    pub model: ModelSpec,
    pub trained_on: Methodology,
    pub train_set: String,
    pub ids_read: Vec<String>,
}

/// Seed-averaged score of one (model, train methodology, set, metric).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: ModelSpec,
    pub trained_on: Methodology,
    pub eval_set: String,
    pub metric: String,
    /// Mean over the seeds where the set was non-empty.
    pub mean: Option<f64>,
    pub per_seed: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub task: Task,
    pub metrics: Vec<String>,
    pub models: Vec<ModelSpec>,
    pub seeds: Vec<u64>,
    pub rows: Vec<SummaryRow>,
    pub significance: SignificanceResult,
}

impl ExperimentSummary {
    pub fn row(&self, model: ModelSpec, trained_on: Methodology, eval_set: &str, metric: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| {
            r.model == model && r.trained_on == trained_on && r.eval_set == eval_set && r.metric == metric
        })
    }

    pub fn mean(&self, model: ModelSpec, trained_on: Methodology, eval_set: &str, metric: &str) -> Option<f64> {
        self.row(model, trained_on, eval_set, metric)?.mean
    }

    /// Table with one row per (model, metric) and one column per train
    /// methodology on each common test set. Cells hold the mean and the
    /// significance group letter.
    pub fn table_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["model".to_string(), "metric".to_string()];
        let columns: Vec<(MethodologyPair, Methodology)> = MethodologyPair::ALL
            .into_iter()
            .flat_map(|p| {
                let (a, b) = p.members();
                [(p, a), (p, b)]
            })
            .collect();
        header.extend(columns.iter().map(|(p, m)| format!("{m} on {p}")));
        w.write_record(&header)?;
        for &model in &self.models {
            for metric in &self.metrics {
                let mut row = vec![model.to_string(), metric.clone()];
                for (p, m) in &columns {
                    let cell = match self.mean(model, *m, &format!("{p}/testc"), metric) {
                        Some(v) => {
                            let key = significance_key(*p, metric);
                            match self.significance.label_of(&key, &system_name(model, *m)) {
                                Some(l) => format!("{v:.4} {l}"),
                                None => format!("{v:.4}"),
                            }
                        }
                        None => String::new(),
                    };
                    row.push(cell);
                }
                w.write_record(&row)?;
            }
        }
        finish_csv(w)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, HarnessError> {
    let bytes = w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Name of a trained system in significance results, e.g. `retrieval@MP`.
pub fn system_name(model: ModelSpec, trained_on: Methodology) -> String {
    format!("{model}@{trained_on}")
}

/// Significance results are keyed by common test set and metric, e.g. `MP-T/em`.
pub fn significance_key(pair: MethodologyPair, metric: &str) -> String {
    format!("{pair}/{metric}")
}

#[derive(Debug, Clone)]
pub struct ExperimentBundle {
    pub config: ExperimentConfig,
    pub manifests: Vec<(u64, Manifest)>,
    pub runs: Vec<RunRecord>,
    pub training_log: Vec<TrainingEvent>,
    pub summary: ExperimentSummary,
}

/// Evaluation sets for a model trained on `m`: its standard test set and the
/// common test set of every pair it belongs to.
fn eval_sets_for(m: Methodology) -> Vec<String> {
    let mut v = vec![format!("{m}/tests")];
    v.extend(
        MethodologyPair::ALL
            .into_iter()
            .filter(|p| p.contains(m))
            .map(|p| format!("{p}/testc")),
    );
    v
}

pub fn run_experiment(corpus: &Corpus, cfg: &ExperimentConfig) -> Result<ExperimentBundle, HarnessError> {
    cfg.bootstrap.validate()?;
    if cfg.seeds.is_empty() {
        return Err(HarnessError::Config("at least one seed is required".into()));
    }
    let task = corpus.samples().first().map_or(Task::CommentGeneration, |s| s.task);
    let metrics: Vec<String> = metric_names(task).iter().map(|s| s.to_string()).collect();
    let mut manifests = Vec::new();
    let mut runs = Vec::new();
    let mut training_log = Vec::new();
    for &seed in &cfg.seeds {
        let split = SplitConfig { seed, ..cfg.split.clone() };
        let artifacts = run_pipeline(corpus, &split)?;
        for &model in &cfg.models {
            for m in Methodology::ALL {
                let train = &artifacts.of(m).train;
                let view = LoggedCorpus::new(corpus);
                let trained = train_model_logged(model, train, &view)?;
                training_log.push(TrainingEvent {
                    seed,
                    model,
                    trained_on: m,
                    train_set: train.label.clone(),
                    ids_read: view.reads(),
                });
                for name in eval_sets_for(m) {
                    let set = artifacts.set_by_name(&name).expect("known set name");
                    let preds = trained.predict_set(set, corpus)?;
                    let report = evaluate_set(&system_name(model, m), &preds, set, corpus)?;
                    runs.push(RunRecord {
                        seed,
                        model,
                        trained_on: m,
                        eval_set: name,
                        report,
                    });
                }
            }
        }
        manifests.push((seed, Manifest::from_artifacts(&artifacts)));
    }
    let rows = summarize(cfg, &metrics, &runs);
    let significance = significance(cfg, &metrics, &runs)?;
    Ok(ExperimentBundle {
        config: cfg.clone(),
        manifests,
        runs,
        training_log,
        summary: ExperimentSummary {
            task,
            metrics,
            models: cfg.models.clone(),
            seeds: cfg.seeds.clone(),
            rows,
            significance,
        },
    })
}

fn summarize(cfg: &ExperimentConfig, metrics: &[String], runs: &[RunRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &model in &cfg.models {
        for m in Methodology::ALL {
            for set in eval_sets_for(m) {
                for metric in metrics {
                    let per_seed: Vec<Option<f64>> = cfg
                        .seeds
                        .iter()
                        .map(|&seed| {
                            runs.iter()
                                .find(|r| r.seed == seed && r.model == model && r.trained_on == m && r.eval_set == set)
                                .and_then(|r| r.report.aggregates.get(metric).copied())
                        })
                        .collect();
                    let present: Vec<f64> = per_seed.iter().flatten().copied().collect();
                    let mean = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
                    rows.push(SummaryRow {
                        model,
                        trained_on: m,
                        eval_set: set.clone(),
                        metric: metric.clone(),
                        mean,
                        per_seed,
                    });
                }
            }
        }
    }
    rows
}

/// Significance on every common test set, comparing every model trained on
/// either member methodology. Per-sample scores of all seeds are concatenated.
fn significance(
    cfg: &ExperimentConfig,
    metrics: &[String],
    runs: &[RunRecord],
) -> Result<SignificanceResult, HarnessError> {
    let mut result = SignificanceResult::empty(&cfg.bootstrap);
    for pair in MethodologyPair::ALL {
        let set = format!("{pair}/testc");
        let (a, b) = pair.members();
        for metric in metrics {
            let mut systems = Vec::new();
            for &model in &cfg.models {
                for m in [a, b] {
                    let scores: Vec<f64> = runs
                        .iter()
                        .filter(|r| r.model == model && r.trained_on == m && r.eval_set == set)
                        .flat_map(|r| r.report.per_sample.get(metric).into_iter().flatten().copied())
                        .collect();
                    systems.push((system_name(model, m), scores));
                }
            }
            if systems.is_empty() || systems[0].1.len() < 2 {
                continue;
            }
            let key = significance_key(pair, metric);
            result.merge(significance_groups_from_scores(&systems, &key, &cfg.bootstrap)?);
        }
    }
    Ok(result)
}

fn file_safe(s: &str) -> String {
    s.replace('/', "_")
}

/// Writes the bundle: manifests, per-run reports, significance, summary
/// table and summary JSON. Returns the written paths in order.
pub fn write_bundle(bundle: &ExperimentBundle, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    let mut put = |rel: PathBuf, text: String| -> Result<(), HarnessError> {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
        Ok(())
    };
    let mut cfg_json = serde_json::to_string_pretty(&bundle.config).expect("config serializes");
    cfg_json.push('\n');
    put(PathBuf::from("config.json"), cfg_json)?;
    for (seed, manifest) in &bundle.manifests {
        put(PathBuf::from(format!("manifests/seed-{seed}.json")), manifest.to_json())?;
    }
    for r in &bundle.runs {
        let rel = format!(
            "reports/seed-{}/{}/{}.json",
            r.seed,
            system_name(r.model, r.trained_on),
            file_safe(&r.eval_set)
        );
        put(PathBuf::from(rel), r.report.to_json())?;
    }
    put(PathBuf::from("significance.json"), bundle.summary.significance.to_json())?;
    put(PathBuf::from("summary.json"), bundle.summary.to_json())?;
    put(PathBuf::from("summary.csv"), bundle.summary.table_csv()?)?;
    Ok(written)
}

/// One plot-ready CSV per (metric, common test set) that has scores:
/// model, train methodology, seed mean, then one column per seed.
pub fn emit_plot_data(summary: &ExperimentSummary, out: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    for metric in &summary.metrics {
        for pair in MethodologyPair::ALL {
            let set = format!("{pair}/testc");
            let rows: Vec<&SummaryRow> = summary
                .rows
                .iter()
                .filter(|r| &r.metric == metric && r.eval_set == set)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["model".to_string(), "trained_on".to_string(), "mean".to_string()];
            header.extend(summary.seeds.iter().map(|s| format!("seed_{s}")));
            w.write_record(&header)?;
            for r in rows {
                let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                let mut rec = vec![r.model.to_string(), r.trained_on.to_string(), fmt(r.mean)];
                rec.extend(r.per_seed.iter().map(|v| fmt(*v)));
                w.write_record(&rec)?;
            }
            std::fs::create_dir_all(out)?;
            let path = out.join(format!("plot_{metric}_{pair}.csv"));
            write_atomic(&path, finish_csv(w)?.as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Reads a summary written by [`write_bundle`].
pub fn load_summary(path: &Path) -> Result<ExperimentSummary, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::{generate_synthetic, SynthConfig};

    fn quick(models: Vec<ModelSpec>) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(
            SplitConfig::yearly_2019_2021(0),
            models,
            BootstrapConfig { resamples: 1000, ..BootstrapConfig::new(1) },
        );
        cfg.seeds = vec![1, 2];
        cfg
    }

    #[test]
    fn oracle_attains_identity_scores() {
        let corpus = generate_synthetic(&SynthConfig::new(6, 8, 2)).unwrap();
        let b = run_experiment(&corpus, &quick(vec![ModelSpec::CopyOracle])).unwrap();
        assert!(!b.runs.is_empty());
        for r in &b.runs {
            assert_eq!(r.report.aggregates.get("em").copied(), (r.report.count > 0).then_some(1.0));
            for (i, id) in r.report.ids.iter().enumerate() {
                let gold = &corpus.get(id).unwrap().summary_subtokens;
                for (metric, best) in crate::metrics::score_pair(Task::CommentGeneration, gold, gold) {
                    assert_eq!(r.report.per_sample[metric][i], best, "{metric} on {}", r.eval_set);
                }
            }
        }
    }

    #[test]
    fn training_reads_only_its_train_set() {
        let corpus = generate_synthetic(&SynthConfig::new(6, 8, 3)).unwrap();
        let b = run_experiment(&corpus, &quick(vec![ModelSpec::Retrieval, ModelSpec::Frequency])).unwrap();
        assert_eq!(b.training_log.len(), 2 * 2 * 3);
        for ev in &b.training_log {
            let manifest = &b.manifests.iter().find(|(s, _)| *s == ev.seed).unwrap().1;
            let train = &manifest.sets[&format!("{}/train", ev.trained_on)];
            assert_eq!(&ev.ids_read, train);
        }
    }

    #[test]
    fn table_and_plots() {
        let corpus = generate_synthetic(&SynthConfig::new(6, 8, 4)).unwrap();
        let b = run_experiment(&corpus, &quick(vec![ModelSpec::Retrieval, ModelSpec::Frequency])).unwrap();
        let table = b.summary.table_csv().unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 4);
        assert!(lines[0].starts_with("model,metric,MP on MP-CP,CP on MP-CP"));
        assert!(lines[1].contains(" α"));
        let dir = tempfile::tempdir().unwrap();
        let files = emit_plot_data(&b.summary, dir.path()).unwrap();
        assert_eq!(files.len(), 4 * 3);
        let again = tempfile::tempdir().unwrap();
        let files2 = emit_plot_data(&b.summary, again.path()).unwrap();
        for (x, y) in files.iter().zip(&files2) {
            assert_eq!(x.file_name(), y.file_name());
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }

    #[test]
    fn empty_summary_has_no_plots() {
        let s = ExperimentSummary {
            task: Task::CommentGeneration,
            metrics: vec!["em".into()],
            models: vec![],
            seeds: vec![1],
            rows: vec![],
            significance: SignificanceResult::empty(&BootstrapConfig::new(0)),
        };
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_plot_data(&s, dir.path()).unwrap().is_empty());
    }
}
