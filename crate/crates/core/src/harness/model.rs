//! Baseline summarizers standing in for learned models.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corpus::{Corpus, Sample, SampleSet};
use crate::splitter::positional_similarity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelSpec {
    /// Summary of the train sample with the most similar code.
    Retrieval,
    /// Most frequent train summary.
    Frequency,
    /// Returns the gold summary. Only meaningful as a test fixture.
    CopyOracle,
}

impl ModelSpec {
    pub fn name(self) -> &'static str {
        match self {
            ModelSpec::Retrieval => "retrieval",
            ModelSpec::Frequency => "frequency",
            ModelSpec::CopyOracle => "copy-oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [ModelSpec::Retrieval, ModelSpec::Frequency, ModelSpec::CopyOracle]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Corpus access that records every id looked up.
pub struct LoggedCorpus<'c> {
    corpus: &'c Corpus,
    reads: RefCell<Vec<String>>,
}

impl<'c> LoggedCorpus<'c> {
    pub fn new(corpus: &'c Corpus) -> Self {
        LoggedCorpus {
            corpus,
            reads: RefCell::new(Vec::new()),
        }
    }

    pub fn get(&self, id: &str) -> Option<&'c Sample> {
        self.reads.borrow_mut().push(id.to_string());
        self.corpus.get(id)
    }

    pub fn reads(&self) -> Vec<String> {
        self.reads.borrow().clone()
    }
}

#[derive(Debug, Clone)]
struct Entry {
    id: String,
    code: Vec<String>,
    summary: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ModelSpec,
    /// Label of the set the model was trained on.
    pub trained_on: String,
    /// Retrieval index, sorted by id.
    index: Vec<Entry>,
    constant: Vec<String>,
}

pub fn train_model(spec: ModelSpec, train: &SampleSet, corpus: &Corpus) -> Result<Model, HarnessError> {
    train_model_logged(spec, train, &LoggedCorpus::new(corpus))
}

/// Like [`train_model`], reading train samples only through `view`.
pub fn train_model_logged(
    spec: ModelSpec,
    train: &SampleSet,
    view: &LoggedCorpus<'_>,
) -> Result<Model, HarnessError> {
    let mut model = Model {
        spec,
        trained_on: train.label.clone(),
        index: Vec::new(),
        constant: Vec::new(),
    };
    if spec == ModelSpec::CopyOracle {
        return Ok(model);
    }
    if train.is_empty() {
        return Err(HarnessError::EmptyTrain(train.label.clone()));
    }
    let mut entries = Vec::with_capacity(train.len());
    for id in &train.ids {
        let s = view
            .get(id)
            .ok_or_else(|| HarnessError::Config(format!("train id `{id}` is not in the corpus")))?;
        entries.push(Entry {
            id: s.id.clone(),
            code: s.code_subtokens.clone(),
            summary: s.summary_subtokens.clone(),
        });
    }
    match spec {
        ModelSpec::Retrieval => {
            entries.sort_by(|a, b| a.id.cmp(&b.id));
            model.index = entries;
        }
        ModelSpec::Frequency => {
            let mut counts: BTreeMap<&Vec<String>, usize> = BTreeMap::new();
            for e in &entries {
                *counts.entry(&e.summary).or_insert(0) += 1;
            }
            // BTreeMap iterates lexicographically, so the first maximum wins ties.
            let mut best: Option<(&Vec<String>, usize)> = None;
            for (s, c) in counts {
                if best.is_none_or(|(_, b)| c > b) {
                    best = Some((s, c));
                }
            }
            model.constant = best.map(|(s, _)| s.clone()).unwrap_or_default();
        }
        ModelSpec::CopyOracle => unreachable!(),
    }
    Ok(model)
}

impl Model {
    pub fn predict(&self, sample: &Sample) -> Vec<String> {
        match self.spec {
            ModelSpec::CopyOracle => sample.summary_subtokens.clone(),
            ModelSpec::Frequency => self.constant.clone(),
            ModelSpec::Retrieval => {
                let mut best: Option<(&Entry, f64)> = None;
                for e in &self.index {
                    let sim = positional_similarity(&sample.code_subtokens, &e.code);
                    // index is id-sorted; strict comparison keeps the smallest id on ties
                    if best.is_none_or(|(_, b)| sim > b) {
                        best = Some((e, sim));
                    }
                }
                best.map(|(e, _)| e.summary.clone()).unwrap_or_default()
            }
        }
    }

    pub fn predict_set(&self, set: &SampleSet, corpus: &Corpus) -> Result<Vec<Vec<String>>, HarnessError> {
        Ok(set.resolve(corpus)?.into_iter().map(|s| self.predict(s)).collect())
    }
}
