use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Methodology, MethodologyPair, MethodologySets, SplitArtifacts, SplitConfig, SplitError};
use crate::corpus::SampleSet;
use crate::io::write_atomic;

pub const MANIFEST_FORMAT: &str = "codesum-split-manifest/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: SplitConfig,
    pub corpus_digest: String,
    pub corpus_size: usize,
    pub tool_version: String,
}

/// On-disk form of [`SplitArtifacts`]: set name to ordered id list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub provenance: Provenance,
    pub sets: BTreeMap<String, Vec<String>>,
}

impl Manifest {
    pub fn from_artifacts(a: &SplitArtifacts) -> Self {
        Manifest {
            format: MANIFEST_FORMAT.to_string(),
            provenance: a.provenance.clone(),
            sets: a
                .named_sets()
                .into_iter()
                .map(|(name, set)| (name, set.ids.clone()))
                .collect(),
        }
    }

    pub fn into_artifacts(self) -> Result<SplitArtifacts, SplitError> {
        if self.format != MANIFEST_FORMAT {
            return Err(SplitError::Manifest(format!("unknown format `{}`", self.format)));
        }
        let mut sets = self.sets;
        let mut take = |name: String| -> Result<SampleSet, SplitError> {
            let ids = sets
                .remove(&name)
                .ok_or_else(|| SplitError::Manifest(format!("missing set `{name}`")))?;
            Ok(SampleSet::new(name, ids))
        };
        let mut by_m = BTreeMap::new();
        for m in Methodology::ALL {
            by_m.insert(
                m,
                MethodologySets {
                    train: take(format!("{m}/train"))?,
                    val: take(format!("{m}/val"))?,
                    tests: take(format!("{m}/tests"))?,
                },
            );
        }
        let mut testc = BTreeMap::new();
        for p in MethodologyPair::ALL {
            testc.insert(p, take(format!("{p}/testc"))?);
        }
        if let Some(extra) = sets.keys().next() {
            return Err(SplitError::Manifest(format!("unexpected set `{extra}`")));
        }
        Ok(SplitArtifacts {
            sets: by_m,
            testc,
            provenance: self.provenance,
        })
    }

    /// Canonical text: pretty JSON with sorted keys and a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, SplitError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SplitError::Manifest(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| SplitError::Manifest(format!("{}: {e}", path.display())))
    }
}
