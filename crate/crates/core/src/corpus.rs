//! Sample data model, subtokenization and the JSON-lines corpus format.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::io::write_atomic;

pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: {field}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },
    #[error("duplicate id `{id}` (line {line})")]
    DuplicateId { id: String, line: usize },
    #[error("sample `{id}`: {message}")]
    Invalid { id: String, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Which summarization task a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    CommentGeneration,
    MethodNaming,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::CommentGeneration => "comment_generation",
            Task::MethodNaming => "method_naming",
        }
    }
}

/// One (code, summary) record with its project and timestamp.
///
/// Subtoken fields are derived from the raw text and never serialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    pub project: String,
    pub timestamp: NaiveDate,
    pub code: String,
    pub code_subtokens: Vec<String>,
    /// Raw summary text: the first documentation sentence.
    pub summary: String,
    /// Comment subtokens for comment generation, name subtokens for method naming.
    pub summary_subtokens: Vec<String>,
    pub name: Option<String>,
    pub task: Task,
}

impl Sample {
    /// Builds a sample and derives both subtoken sequences.
    pub fn new(
        id: impl Into<String>,
        project: impl Into<String>,
        timestamp: NaiveDate,
        code: impl Into<String>,
        summary: impl Into<String>,
        name: Option<String>,
        task: Task,
    ) -> Self {
        let code = code.into();
        let summary = summary.into();
        let code_subtokens = subtokenize(&code);
        let summary_subtokens = derive_summary_subtokens(&summary, name.as_deref(), task);
        Sample {
            id: id.into(),
            project: project.into(),
            timestamp,
            code,
            code_subtokens,
            summary,
            summary_subtokens,
            name,
            task,
        }
    }

    /// Key used for earliest-timestamp deduplication: everything but id and timestamp.
    pub fn content_key(&self) -> (&str, &str, &str, Option<&str>, Task) {
        (
            &self.project,
            &self.code,
            &self.summary,
            self.name.as_deref(),
            self.task,
        )
    }
}

fn derive_summary_subtokens(summary: &str, name: Option<&str>, task: Task) -> Vec<String> {
    match (task, name) {
        (Task::MethodNaming, Some(name)) => subtokenize(name),
        _ => subtokenize(summary),
    }
}

/// A set of samples plus the projects they come from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    samples: Vec<Sample>,
    projects: BTreeSet<String>,
    index: HashMap<String, usize>,
    /// Collection instant; every timestamp must be strictly before it.
    pub tau: Option<NaiveDate>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids.
    pub fn new(samples: Vec<Sample>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(samples.len());
        let mut projects = BTreeSet::new();
        for (i, s) in samples.iter().enumerate() {
            if index.insert(s.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    id: s.id.clone(),
                    line: i + 1,
                });
            }
            projects.insert(s.project.clone());
        }
        Ok(Corpus {
            samples,
            projects,
            index,
            tau: None,
        })
    }

    pub fn with_tau(mut self, tau: NaiveDate) -> Self {
        self.tau = Some(tau);
        self
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn projects(&self) -> &BTreeSet<String> {
        &self.projects
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.index.get(id).map(|&i| &self.samples[i])
    }

    /// Position of a sample in corpus order.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    /// Checks the invariants a split-ready corpus must satisfy: non-empty
    /// subtoken sequences, timestamps before `tau`, and no two samples with
    /// identical content.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = HashMap::new();
        for s in &self.samples {
            if s.code_subtokens.is_empty() {
                return Err(invalid(s, "code has no subtokens"));
            }
            if s.summary_subtokens.is_empty() {
                return Err(invalid(s, "summary has no subtokens"));
            }
            if let Some(tau) = self.tau {
                if s.timestamp >= tau {
                    return Err(invalid(
                        s,
                        &format!("timestamp {} is not before {}", s.timestamp, tau),
                    ));
                }
            }
            if let Some(other) = seen.insert(s.content_key(), &s.id) {
                return Err(invalid(s, &format!("same content as `{other}`")));
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical serialization.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(serialize_corpus(self).as_bytes());
        hex::encode(hasher.finalize())
    }
}

fn invalid(s: &Sample, message: &str) -> CorpusError {
    CorpusError::Invalid {
        id: s.id.clone(),
        message: message.to_string(),
    }
}

/// An ordered, duplicate-free list of sample ids with a provenance label
/// such as `"T/train"`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SampleSet {
    pub label: String,
    pub ids: Vec<String>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, ids: Vec<String>) -> Self {
        SampleSet {
            label: label.into(),
            ids,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn id_set(&self) -> std::collections::HashSet<&str> {
        self.ids.iter().map(String::as_str).collect()
    }

    /// Resolves every id against `corpus`, failing on the first unknown one.
    pub fn resolve<'c>(&self, corpus: &'c Corpus) -> Result<Vec<&'c Sample>, CorpusError> {
        self.ids
            .iter()
            .map(|id| {
                corpus.get(id).ok_or_else(|| CorpusError::Invalid {
                    id: id.clone(),
                    message: format!("listed in `{}` but not in the corpus", self.label),
                })
            })
            .collect()
    }

    /// True when there are no repeated ids.
    pub fn is_duplicate_free(&self) -> bool {
        self.id_set().len() == self.ids.len()
    }
}

/// Splits identifiers and text into lowercase subtokens.
///
/// Boundaries: any non-ASCII-alphanumeric character, lower-to-upper case
/// transitions, the last capital of an acronym run followed by a lowercase
/// letter (`HTTPServer` -> `http`, `server`), and letter/digit transitions.
pub fn subtokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(|c: char| !c.is_ascii_alphanumeric()) {
        if word.is_empty() {
            continue;
        }
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next = chars.get(i + 1).copied();
            let boundary = (prev.is_ascii_lowercase() && cur.is_ascii_uppercase())
                || (prev.is_ascii_digit() != cur.is_ascii_digit())
                || (prev.is_ascii_uppercase()
                    && cur.is_ascii_uppercase()
                    && next.is_some_and(|n| n.is_ascii_lowercase()));
            if boundary {
                out.push(chars[start..i].iter().collect::<String>().to_ascii_lowercase());
                start = i;
            }
        }
        out.push(chars[start..].iter().collect::<String>().to_ascii_lowercase());
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRecord {
    id: String,
    project: String,
    timestamp: String,
    code: String,
    summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    task: Task,
}

impl From<&Sample> for SampleRecord {
    fn from(s: &Sample) -> Self {
        SampleRecord {
            id: s.id.clone(),
            project: s.project.clone(),
            timestamp: s.timestamp.format(DATE_FORMAT).to_string(),
            code: s.code.clone(),
            summary: s.summary.clone(),
            name: s.name.clone(),
            task: s.task,
        }
    }
}

const REQUIRED_FIELDS: [&str; 6] = ["id", "project", "timestamp", "code", "summary", "task"];

fn parse_line(path: &Path, line_no: usize, line: &str) -> Result<Sample, CorpusError> {
    let malformed = |field: &str, message: String| CorpusError::Malformed {
        path: path.to_path_buf(),
        line: line_no,
        field: field.to_string(),
        message,
    };
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| malformed("<record>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("<record>", "expected a JSON object".into()))?;
    for field in REQUIRED_FIELDS {
        if !obj.contains_key(field) {
            return Err(malformed(field, "missing field".into()));
        }
    }
    for (field, v) in obj {
        let ok = match field.as_str() {
            "name" => v.is_string() || v.is_null(),
            _ => v.is_string(),
        };
        if !ok {
            return Err(malformed(field, format!("expected a string, found {v}")));
        }
    }
    let rec: SampleRecord =
        serde_json::from_value(value).map_err(|e| malformed("<record>", e.to_string()))?;
    let timestamp = NaiveDate::parse_from_str(&rec.timestamp, DATE_FORMAT)
        .map_err(|e| malformed("timestamp", format!("{e}: `{}`", rec.timestamp)))?;
    if rec.id.is_empty() {
        return Err(malformed("id", "empty id".into()));
    }
    Ok(Sample::new(
        rec.id,
        rec.project,
        timestamp,
        rec.code,
        rec.summary,
        rec.name,
        rec.task,
    ))
}

/// Reads a JSON-lines corpus. Blank lines are ignored.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::open(path).map_err(io_err)?;
    let mut samples = Vec::new();
    let mut lines_of: HashMap<String, usize> = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let sample = parse_line(path, i + 1, &line)?;
        if lines_of.insert(sample.id.clone(), i + 1).is_some() {
            return Err(CorpusError::DuplicateId {
                id: sample.id,
                line: i + 1,
            });
        }
        samples.push(sample);
    }
    Corpus::new(samples)
}

/// Canonical serialization: one JSON object per line, fixed field order.
pub fn serialize_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for s in corpus.samples() {
        out.push_str(
            &serde_json::to_string(&SampleRecord::from(s)).expect("sample records always serialize"),
        );
        out.push('\n');
    }
    out
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    write_atomic(path, serialize_corpus(corpus).as_bytes()).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}
