//! Turns a timestamped corpus into training, validation and test sets for
//! the mixed-project, cross-project and time-segmented methodologies, plus
//! the common test set of every pair of methodologies.
//!
//! The steps, in order: time segmentation per project, seeded in-project
//! split of every segment, seeded cross-project split, grouping into
//! per-methodology sets, pairwise intersection of the standard test sets,
//! train-set downsampling, and duplicate cleaning of evaluation sets.

mod clean;
mod config;
mod group;
mod manifest;
mod pipeline;
mod segment;

pub use clean::{clean, positional_similarity, DuplicateIndex};
pub use config::{DedupConfig, DedupMode, SplitConfig};
pub use group::{closed_form_testc, common_test, group, Intermediates};
pub use manifest::{Manifest, Provenance, MANIFEST_FORMAT};
pub use pipeline::{
    check_partition, downsample_trains, run_pipeline, run_pipeline_stages, validate_artifacts,
    PipelineStages,
};
pub use segment::{
    apportion, cross_project_split, in_project_split, time_segment, ProjectSegments, ProjectSplit,
    Segment, ThreeWay,
};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, SampleSet};

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("invalid split config: {0}")]
    Config(String),
    #[error("sample `{id}` has timestamp {timestamp}, not before tau {tau}")]
    AfterTau {
        id: String,
        timestamp: chrono::NaiveDate,
        tau: chrono::NaiveDate,
    },
    #[error("cross-project split needs at least 3 projects, found {0}")]
    TooFewProjects(usize),
    #[error("TestC for {pair} disagrees with its closed form ({detail})")]
    ClosedFormMismatch { pair: MethodologyPair, detail: String },
    #[error("split invariants violated: {}", .0.join("; "))]
    Invariant(Vec<String>),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// An evaluation methodology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Methodology {
    #[serde(rename = "MP")]
    MixedProject,
    #[serde(rename = "CP")]
    CrossProject,
    #[serde(rename = "T")]
    TimeSegmented,
}

impl Methodology {
    pub const ALL: [Methodology; 3] = [
        Methodology::MixedProject,
        Methodology::CrossProject,
        Methodology::TimeSegmented,
    ];

    pub fn short(self) -> &'static str {
        match self {
            Methodology::MixedProject => "MP",
            Methodology::CrossProject => "CP",
            Methodology::TimeSegmented => "T",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.short() == s)
    }
}

impl fmt::Display for Methodology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

/// An unordered pair of methodologies sharing a common test set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodologyPair {
    #[serde(rename = "MP-CP")]
    MpCp,
    #[serde(rename = "MP-T")]
    MpT,
    #[serde(rename = "CP-T")]
    CpT,
}

impl MethodologyPair {
    pub const ALL: [MethodologyPair; 3] =
        [MethodologyPair::MpCp, MethodologyPair::MpT, MethodologyPair::CpT];

    pub fn members(self) -> (Methodology, Methodology) {
        use Methodology::*;
        match self {
            MethodologyPair::MpCp => (MixedProject, CrossProject),
            MethodologyPair::MpT => (MixedProject, TimeSegmented),
            MethodologyPair::CpT => (CrossProject, TimeSegmented),
        }
    }

    pub fn contains(self, m: Methodology) -> bool {
        let (a, b) = self.members();
        a == m || b == m
    }

    pub fn short(self) -> &'static str {
        match self {
            MethodologyPair::MpCp => "MP-CP",
            MethodologyPair::MpT => "MP-T",
            MethodologyPair::CpT => "CP-T",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.short() == s)
    }
}

impl fmt::Display for MethodologyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

/// Train, validation and standard test set of one methodology.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MethodologySets {
    pub train: SampleSet,
    pub val: SampleSet,
    pub tests: SampleSet,
}

/// Every set produced by the pipeline, keyed by methodology and pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitArtifacts {
    pub sets: BTreeMap<Methodology, MethodologySets>,
    pub testc: BTreeMap<MethodologyPair, SampleSet>,
    pub provenance: Provenance,
}

impl SplitArtifacts {
    pub fn of(&self, m: Methodology) -> &MethodologySets {
        &self.sets[&m]
    }

    pub fn common(&self, pair: MethodologyPair) -> &SampleSet {
        &self.testc[&pair]
    }

    /// Looks up a set by manifest name, e.g. `"MP/train"` or `"CP-T/testc"`.
    pub fn set_by_name(&self, name: &str) -> Option<&SampleSet> {
        let (head, kind) = name.split_once('/')?;
        if kind == "testc" {
            return self.testc.get(&MethodologyPair::parse(head)?);
        }
        let sets = self.sets.get(&Methodology::parse(head)?)?;
        match kind {
            "train" => Some(&sets.train),
            "val" => Some(&sets.val),
            "tests" => Some(&sets.tests),
            _ => None,
        }
    }

    /// All sets in manifest order.
    pub fn named_sets(&self) -> Vec<(String, &SampleSet)> {
        let mut out = Vec::new();
        for (m, s) in &self.sets {
            out.push((format!("{m}/train"), &s.train));
            out.push((format!("{m}/val"), &s.val));
            out.push((format!("{m}/tests"), &s.tests));
        }
        for (p, s) in &self.testc {
            out.push((format!("{p}/testc"), s));
        }
        out
    }
}
