//! Automatic metrics over subtoken sequences.
//!
//! Comment generation is scored with sentence BLEU-4, METEOR, ROUGE-L and
//! exact match; method naming with subtoken precision, recall, F1 and exact
//! match. Corpus-level values are unweighted means of per-sample scores.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, SampleSet, Task};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("set `{set}` has {expected} samples but {got} predictions were given")]
    LengthMismatch {
        set: String,
        expected: usize,
        got: usize,
    },
    #[error("set `{set}` mixes tasks")]
    MixedTasks { set: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

type Tokens = [String];

fn ngram_counts(tokens: &Tokens, n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence-level BLEU-4.
///
/// Unigram precision is unsmoothed; higher orders add one to both the
/// clipped match count and the n-gram total. Brevity penalty applies when
/// the prediction is shorter than the reference. An empty prediction scores 0.
pub fn bleu4(pred: &Tokens, reference: &Tokens) -> f64 {
    if pred.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut product = 1.0;
    for n in 1..=4 {
        let p = ngram_counts(pred, n);
        let r = ngram_counts(reference, n);
        let total: usize = p.values().sum();
        let matched: usize = p
            .iter()
            .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
            .sum();
        let precision = if n == 1 {
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        product *= precision;
    }
    let bp = if pred.len() < reference.len() {
        (1.0 - reference.len() as f64 / pred.len() as f64).exp()
    } else {
        1.0
    };
    bp * product.powf(0.25)
}

pub const METEOR_ALPHA: f64 = 0.9;
pub const METEOR_GAMMA: f64 = 0.5;
pub const METEOR_BETA: f64 = 3.0;

/// Node budget for the exact chunk-minimizing alignment search; beyond it
/// the best alignment found so far is used.
const METEOR_SEARCH_BUDGET: usize = 200_000;

struct ChunkSearch<'a> {
    pred: &'a Tokens,
    /// For each pred position, candidate ref positions holding the same token.
    candidates: Vec<Vec<usize>>,
    /// Remaining pred positions per token that may stay unmatched.
    skips_left: HashMap<&'a str, usize>,
    used: Vec<bool>,
    best: usize,
    nodes: usize,
}

impl ChunkSearch<'_> {
    fn run(&mut self, i: usize, prev: Option<usize>, chunks: usize) {
        self.nodes += 1;
        if chunks >= self.best || self.nodes > METEOR_SEARCH_BUDGET {
            return;
        }
        if i == self.pred.len() {
            self.best = chunks;
            return;
        }
        // Continuing the current chunk first finds good solutions early.
        let mut options: Vec<usize> = self.candidates[i]
            .iter()
            .copied()
            .filter(|&j| !self.used[j])
            .collect();
        if let Some(p) = prev {
            if let Some(k) = options.iter().position(|&j| j == p + 1) {
                options.swap(0, k);
            }
        }
        for j in options {
            let extends = prev.is_some_and(|p| p + 1 == j);
            self.used[j] = true;
            self.run(i + 1, Some(j), chunks + usize::from(!extends));
            self.used[j] = false;
        }
        let tok = self.pred[i].as_str();
        let left = self.skips_left.get(tok).copied().unwrap_or(0);
        if left > 0 {
            self.skips_left.insert(tok, left - 1);
            self.run(i + 1, None, chunks);
            self.skips_left.insert(tok, left);
        }
    }
}

/// Greedy alignment used to seed the search: every pred token takes the
/// unused ref occurrence that extends the current chunk, else the first one.
fn greedy_chunks(pred: &Tokens, reference: &Tokens) -> usize {
    let mut used = vec![false; reference.len()];
    let mut prev: Option<usize> = None;
    let mut chunks = 0;
    for tok in pred {
        let next = prev
            .map(|p| p + 1)
            .filter(|&j| j < reference.len() && !used[j] && &reference[j] == tok);
        let pick = next.or_else(|| (0..reference.len()).find(|&j| !used[j] && &reference[j] == tok));
        match pick {
            Some(j) => {
                if !prev.is_some_and(|p| p + 1 == j) {
                    chunks += 1;
                }
                used[j] = true;
                prev = Some(j);
            }
            None => prev = None,
        }
    }
    chunks
}

/// Size of the maximum one-to-one unigram alignment and the minimum number
/// of chunks among alignments of that size.
pub fn meteor_alignment(pred: &Tokens, reference: &Tokens) -> (usize, usize) {
    let mut pred_counts: HashMap<&str, usize> = HashMap::new();
    let mut ref_counts: HashMap<&str, usize> = HashMap::new();
    for t in pred {
        *pred_counts.entry(t).or_insert(0) += 1;
    }
    for t in reference {
        *ref_counts.entry(t).or_insert(0) += 1;
    }
    let matches: usize = pred_counts
        .iter()
        .map(|(t, &c)| c.min(ref_counts.get(t).copied().unwrap_or(0)))
        .sum();
    if matches == 0 {
        return (0, 0);
    }
    let skips_left = pred_counts
        .iter()
        .map(|(&t, &c)| (t, c - c.min(ref_counts.get(t).copied().unwrap_or(0))))
        .collect();
    let candidates = pred
        .iter()
        .map(|t| (0..reference.len()).filter(|&j| &reference[j] == t).collect())
        .collect();
    let mut search = ChunkSearch {
        pred,
        candidates,
        skips_left,
        used: vec![false; reference.len()],
        best: greedy_chunks(pred, reference) + 1,
        nodes: 0,
    };
    search.run(0, None, 0);
    (matches, search.best.min(greedy_chunks(pred, reference)))
}

/// METEOR with exact unigram matching only (no stemming or synonyms).
pub fn meteor(pred: &Tokens, reference: &Tokens) -> f64 {
    if pred.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let (m, chunks) = meteor_alignment(pred, reference);
    if m == 0 {
        return 0.0;
    }
    let precision = m as f64 / pred.len() as f64;
    let recall = m as f64 / reference.len() as f64;
    let f = precision * recall / (METEOR_ALPHA * precision + (1.0 - METEOR_ALPHA) * recall);
    let penalty = METEOR_GAMMA * (chunks as f64 / m as f64).powf(METEOR_BETA);
    f * (1.0 - penalty)
}

/// Precision, recall and F-measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    const ZERO: Prf = Prf {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    fn from_counts(common: usize, pred_len: usize, ref_len: usize) -> Prf {
        if common == 0 || pred_len == 0 || ref_len == 0 {
            return Prf::ZERO;
        }
        let precision = common as f64 / pred_len as f64;
        let recall = common as f64 / ref_len as f64;
        Prf {
            precision,
            recall,
            f1: 2.0 * precision * recall / (precision + recall),
        }
    }
}

pub fn lcs_len(a: &Tokens, b: &Tokens) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE-L from the longest common subsequence.
pub fn rouge_l(pred: &Tokens, reference: &Tokens) -> Prf {
    Prf::from_counts(lcs_len(pred, reference), pred.len(), reference.len())
}

pub fn exact_match(pred: &Tokens, reference: &Tokens) -> f64 {
    if pred == reference {
        1.0
    } else {
        0.0
    }
}

/// Subtoken precision/recall/F1 with multiset intersection.
pub fn set_match_prf(pred: &Tokens, gold: &Tokens) -> Prf {
    let mut gold_counts: HashMap<&str, usize> = HashMap::new();
    for t in gold {
        *gold_counts.entry(t).or_insert(0) += 1;
    }
    let mut common = 0;
    for t in pred {
        if let Some(c) = gold_counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    Prf::from_counts(common, pred.len(), gold.len())
}

/// Metric names, in report order, for a task.
pub fn metric_names(task: Task) -> &'static [&'static str] {
    match task {
        Task::CommentGeneration => &["bleu", "meteor", "rouge_l", "em"],
        Task::MethodNaming => &["precision", "recall", "f1", "em"],
    }
}

/// Every metric of the task's suite for one prediction.
pub fn score_pair(task: Task, pred: &Tokens, reference: &Tokens) -> Vec<(&'static str, f64)> {
    match task {
        Task::CommentGeneration => vec![
            ("bleu", bleu4(pred, reference)),
            ("meteor", meteor(pred, reference)),
            ("rouge_l", rouge_l(pred, reference).f1),
            ("em", exact_match(pred, reference)),
        ],
        Task::MethodNaming => {
            let prf = set_match_prf(pred, reference);
            vec![
                ("precision", prf.precision),
                ("recall", prf.recall),
                ("f1", prf.f1),
                ("em", exact_match(pred, reference)),
            ]
        }
    }
}

/// Per-sample and mean scores of one model on one evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model: String,
    pub set_label: String,
    pub task: Task,
    pub count: usize,
    /// Sample ids, aligned with every per-sample vector.
    pub ids: Vec<String>,
    pub per_sample: BTreeMap<String, Vec<f64>>,
    pub aggregates: BTreeMap<String, f64>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Per-sample scores as CSV: `id` followed by one column per metric.
    pub fn per_sample_csv(&self) -> Result<String, MetricsError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let names: Vec<&String> = self.per_sample.keys().collect();
        let mut header = vec!["id"];
        header.extend(names.iter().map(|s| s.as_str()));
        w.write_record(&header)?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(names.iter().map(|n| self.per_sample[*n][i].to_string()));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| MetricsError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Scores `predictions` against the samples of `references`, in set order.
pub fn evaluate_set(
    model: &str,
    predictions: &[Vec<String>],
    references: &SampleSet,
    corpus: &Corpus,
) -> Result<MetricReport, MetricsError> {
    if predictions.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            set: references.label.clone(),
            expected: references.len(),
            got: predictions.len(),
        });
    }
    let samples = references.resolve(corpus)?;
    let task = samples.first().map_or(Task::CommentGeneration, |s| s.task);
    if samples.iter().any(|s| s.task != task) {
        return Err(MetricsError::MixedTasks {
            set: references.label.clone(),
        });
    }
    let mut per_sample: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    if !samples.is_empty() {
        for name in metric_names(task) {
            per_sample.insert(name.to_string(), Vec::with_capacity(samples.len()));
        }
    }
    for (pred, s) in predictions.iter().zip(&samples) {
        for (name, v) in score_pair(task, pred, &s.summary_subtokens) {
            per_sample.get_mut(name).expect("registered").push(v);
        }
    }
    let aggregates = per_sample
        .iter()
        .map(|(k, v)| (k.clone(), v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    Ok(MetricReport {
        model: model.to_string(),
        set_label: references.label.clone(),
        task,
        count: samples.len(),
        ids: references.ids.clone(),
        per_sample,
        aggregates,
    })
}
