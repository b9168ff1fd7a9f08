//! Paired bootstrap significance tests and significance groups.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricReport;
use crate::rng::rng_for;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("invalid bootstrap config: {0}")]
    Config(String),
    #[error("score vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 paired scores, got {0}")]
    TooShort(usize),
    #[error("reports are not on the same samples: {0}")]
    MismatchedSets(String),
    #[error("metric `{metric}` missing from report of `{model}`")]
    MissingMetric { model: String, metric: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(seed: u64) -> Self {
        BootstrapConfig {
            resamples: 10_000,
            confidence: 0.95,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if self.resamples < 1000 {
            return Err(StatsError::Config(format!(
                "resamples must be at least 1000, got {}",
                self.resamples
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(StatsError::Config(format!(
                "confidence must be in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }

    /// Largest p-value still counted as significant.
    pub fn alpha(&self) -> f64 {
        1.0 - self.confidence
    }
}

/// Outcome of one paired test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOutcome {
    /// mean(a) - mean(b).
    pub delta: f64,
    /// One-sided p-value for the better-scoring system.
    pub p: f64,
    /// True when `a` scored at least as well as `b`.
    pub a_is_better: bool,
}

/// Paired bootstrap test.
///
/// With δ the observed mean difference in favour of the better system,
/// p is the fraction of resamples whose difference δ* exceeds 2δ. Resamples
/// with δ* exactly equal to 2δ count one half, so that identical systems get
/// p = 0.5 instead of 0. Resample indices depend only on the seed and the
/// vector length.
pub fn paired_bootstrap_outcome(
    scores_a: &[f64],
    scores_b: &[f64],
    cfg: &BootstrapConfig,
) -> Result<BootstrapOutcome, StatsError> {
    cfg.validate()?;
    if scores_a.len() != scores_b.len() {
        return Err(StatsError::LengthMismatch(scores_a.len(), scores_b.len()));
    }
    let n = scores_a.len();
    if n < 2 {
        return Err(StatsError::TooShort(n));
    }
    let diffs: Vec<f64> = scores_a.iter().zip(scores_b).map(|(a, b)| a - b).collect();
    let total: f64 = diffs.iter().sum();
    let a_is_better = total >= 0.0;
    let sign = if a_is_better { 1.0 } else { -1.0 };
    let diffs: Vec<f64> = diffs.iter().map(|d| d * sign).collect();
    let total = total * sign;
    // Compare sums rather than means; the tolerance absorbs summation order.
    let threshold = 2.0 * total;
    let scale: f64 = diffs.iter().map(|d| d.abs()).sum::<f64>().max(1.0);
    let tol = 1e-9 * scale;
    let mut rng = rng_for(cfg.seed, "bootstrap");
    let mut above = 0usize;
    let mut ties = 0usize;
    for _ in 0..cfg.resamples {
        let s: f64 = (0..n).map(|_| diffs[rng.gen_range(0..n)]).sum();
        if s > threshold + tol {
            above += 1;
        } else if s >= threshold - tol {
            ties += 1;
        }
    }
    let p = (above as f64 + 0.5 * ties as f64) / cfg.resamples as f64;
    Ok(BootstrapOutcome {
        delta: sign * total / n as f64,
        p,
        a_is_better,
    })
}

/// p-value of [`paired_bootstrap_outcome`].
pub fn paired_bootstrap(scores_a: &[f64], scores_b: &[f64], cfg: &BootstrapConfig) -> Result<f64, StatsError> {
    paired_bootstrap_outcome(scores_a, scores_b, cfg).map(|o| o.p)
}

const GREEK: [&str; 24] = [
    "α", "β", "γ", "δ", "ε", "ζ", "η", "θ", "ι", "κ", "λ", "μ", "ν", "ξ", "ο", "π", "ρ", "σ",
    "τ", "υ", "φ", "χ", "ψ", "ω",
];

/// Group label for the `i`-th group: Greek letters, then numbered.
pub fn group_letter(i: usize) -> String {
    match GREEK.get(i) {
        Some(l) => l.to_string(),
        None => format!("{}{}", GREEK[i % GREEK.len()], i / GREEK.len()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub model_a: String,
    pub model_b: String,
    pub metric: String,
    pub p: f64,
    pub delta: f64,
    pub better: String,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceGroup {
    pub label: String,
    pub models: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub test: String,
    pub config: BootstrapConfig,
    pub pairwise: Vec<PairwiseTest>,
    /// Per metric, groups ordered by their best member's mean score.
    pub groups: BTreeMap<String, Vec<SignificanceGroup>>,
}

impl SignificanceResult {
    pub fn empty(cfg: &BootstrapConfig) -> Self {
        SignificanceResult {
            test: "paired bootstrap, one-sided".to_string(),
            config: *cfg,
            pairwise: Vec::new(),
            groups: BTreeMap::new(),
        }
    }

    pub fn merge(&mut self, other: SignificanceResult) {
        self.pairwise.extend(other.pairwise);
        self.groups.extend(other.groups);
    }

    /// Label of the group holding `model` under `metric`.
    pub fn label_of(&self, metric: &str, model: &str) -> Option<&str> {
        self.groups
            .get(metric)?
            .iter()
            .find(|g| g.models.iter().any(|m| m == model))
            .map(|g| g.label.as_str())
    }

    pub fn p_value(&self, metric: &str, a: &str, b: &str) -> Option<f64> {
        self.pairwise
            .iter()
            .find(|t| {
                t.metric == metric
                    && ((t.model_a == a && t.model_b == b) || (t.model_a == b && t.model_b == a))
            })
            .map(|t| t.p)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut i = i;
    while parent[i] != r {
        let next = parent[i];
        parent[i] = r;
        i = next;
    }
    r
}

/// Pairwise tests and groups for named score vectors on one metric. Groups
/// are connected components of the "not significantly different" relation.
pub fn significance_groups_from_scores(
    systems: &[(String, Vec<f64>)],
    metric: &str,
    cfg: &BootstrapConfig,
) -> Result<SignificanceResult, StatsError> {
    cfg.validate()?;
    let k = systems.len();
    let mut parent: Vec<usize> = (0..k).collect();
    let mut pairwise = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let (na, a) = &systems[i];
            let (nb, b) = &systems[j];
            let o = paired_bootstrap_outcome(a, b, cfg)?;
            let significant = o.p < cfg.alpha();
            if !significant {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
            pairwise.push(PairwiseTest {
                model_a: na.clone(),
                model_b: nb.clone(),
                metric: metric.to_string(),
                p: o.p,
                delta: o.delta,
                better: if o.a_is_better { na.clone() } else { nb.clone() },
                significant,
            });
        }
    }
    let means: Vec<f64> = systems
        .iter()
        .map(|(_, v)| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 })
        .collect();
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..k {
        let r = find(&mut parent, i);
        components.entry(r).or_default().push(i);
    }
    let mut comps: Vec<Vec<usize>> = components.into_values().collect();
    let best = |c: &Vec<usize>| c.iter().map(|&i| means[i]).fold(f64::NEG_INFINITY, f64::max);
    comps.sort_by(|x, y| best(y).total_cmp(&best(x)).then(x[0].cmp(&y[0])));
    let groups = comps
        .into_iter()
        .enumerate()
        .map(|(g, members)| SignificanceGroup {
            label: group_letter(g),
            models: members.into_iter().map(|i| systems[i].0.clone()).collect(),
        })
        .collect();
    let mut result = SignificanceResult::empty(cfg);
    result.pairwise = pairwise;
    result.groups.insert(metric.to_string(), groups);
    Ok(result)
}

/// Significance groups across per-model reports on one shared evaluation set.
pub fn significance_groups(
    reports: &[&MetricReport],
    metric: &str,
    cfg: &BootstrapConfig,
) -> Result<SignificanceResult, StatsError> {
    if let Some(first) = reports.first() {
        for r in &reports[1..] {
            if r.ids != first.ids {
                return Err(StatsError::MismatchedSets(format!(
                    "`{}` on {} and `{}` on {}",
                    first.model, first.set_label, r.model, r.set_label
                )));
            }
        }
    }
    let systems = reports
        .iter()
        .map(|r| {
            let v = r.per_sample.get(metric).ok_or_else(|| StatsError::MissingMetric {
                model: r.model.clone(),
                metric: metric.to_string(),
            })?;
            Ok((r.model.clone(), v.clone()))
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    significance_groups_from_scores(&systems, metric, cfg)
}

/// Significance over several reports on one set, for each metric in
/// `metrics`, plus a CSV table: `model,metric,mean,group`.
pub fn compare_reports(
    reports: &[&MetricReport],
    metrics: &[String],
    cfg: &BootstrapConfig,
) -> Result<(SignificanceResult, String), StatsError> {
    let mut result = SignificanceResult::empty(cfg);
    for metric in metrics {
        result.merge(significance_groups(reports, metric, cfg)?);
    }
    let mut out = String::from("model,metric,mean,group\n");
    for metric in metrics {
        for r in reports {
            let mean = r.aggregates.get(metric).map_or(String::new(), |v| format!("{v:.4}"));
            let group = result.label_of(metric, &r.model).unwrap_or("");
            out.push_str(&format!("{},{metric},{mean},{group}\n", csv_field(&r.model)));
        }
    }
    Ok((result, out))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
