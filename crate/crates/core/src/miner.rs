//! Mines timestamped samples from local git repositories.
//!
//! Each repository is checked out at the last commit strictly before every
//! cutoff; documented methods are extracted from the snapshot and stamped
//! with the day before that cutoff. Git is only ever driven through its
//! command-line interface.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use walkdir::WalkDir;

use crate::corpus::{Corpus, CorpusError, Sample, Task};
use crate::javascan::{
    doc_description, first_sentence, scan_documented_methods, strip_doc_tags, DocTagConfig,
};

#[derive(Debug, Error)]
pub enum MinerError {
    #[error("invalid miner config: {0}")]
    Config(String),
    #[error("git {args} failed in {repo}: {stderr}")]
    Git {
        repo: PathBuf,
        args: String,
        stderr: String,
    },
    #[error("could not run git: {0}")]
    Spawn(#[from] std::io::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// How methods are pulled out of a snapshot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extractor {
    /// Doc-block adjacency plus brace matching.
    #[default]
    BraceScanner,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinerConfig {
    pub repo_paths: Vec<PathBuf>,
    pub cutoffs: Vec<NaiveDate>,
    #[serde(default)]
    pub extractor: Extractor,
    /// File extensions (without dot) that are scanned.
    pub extensions: Vec<String>,
    pub task: Task,
    #[serde(default)]
    pub doc_tags: DocTagConfig,
}

impl MinerConfig {
    pub fn new(repo_paths: Vec<PathBuf>, cutoffs: Vec<NaiveDate>) -> Self {
        MinerConfig {
            repo_paths,
            cutoffs,
            extractor: Extractor::BraceScanner,
            extensions: vec!["java".into()],
            task: Task::CommentGeneration,
            doc_tags: DocTagConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), MinerError> {
        if self.repo_paths.is_empty() {
            return Err(MinerError::Config("at least one repository is required".into()));
        }
        if self.cutoffs.is_empty() {
            return Err(MinerError::Config("at least one cutoff is required".into()));
        }
        if self.cutoffs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MinerError::Config("cutoffs must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Timestamp given to samples found in the snapshot taken for `cutoff`.
pub fn snapshot_stamp(cutoff: NaiveDate) -> NaiveDate {
    cutoff - Duration::days(1)
}

fn cutoff_epoch(cutoff: NaiveDate) -> i64 {
    cutoff
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp()
}

/// A commit selected as a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    pub id: String,
    /// Committer time, seconds since the Unix epoch.
    pub time: i64,
}

/// A local repository whose history is walked from the commit that was
/// checked out when it was opened.
#[derive(Debug)]
pub struct Repo {
    path: PathBuf,
    tip: String,
    branch: Option<String>,
}

fn git(repo: &Path, args: &[&str]) -> Result<String, MinerError> {
    let out = Command::new("git").arg("-C").arg(repo).args(args).output()?;
    if !out.status.success() {
        return Err(MinerError::Git {
            repo: repo.to_path_buf(),
            args: args.join(" "),
            stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

impl Repo {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, MinerError> {
        let path = path.into();
        let tip = git(&path, &["rev-parse", "--verify", "HEAD"])?.trim().to_string();
        let branch = git(&path, &["symbolic-ref", "-q", "--short", "HEAD"])
            .ok()
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty());
        Ok(Repo { path, tip, branch })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Every commit reachable from the tip, in `git log` order (newest first).
    pub fn history(&self) -> Result<Vec<Commit>, MinerError> {
        let log = git(&self.path, &["log", "--format=%H %ct", &self.tip])?;
        log.lines()
            .filter(|l| !l.is_empty())
            .map(|l| {
                let (id, time) = l.split_once(' ').ok_or_else(|| self.corrupt(l))?;
                let time = time.parse().map_err(|_| self.corrupt(l))?;
                Ok(Commit {
                    id: id.to_string(),
                    time,
                })
            })
            .collect()
    }

    fn corrupt(&self, line: &str) -> MinerError {
        MinerError::Git {
            repo: self.path.clone(),
            args: "log".into(),
            stderr: format!("unparseable log line `{line}`"),
        }
    }

    /// Newest commit strictly before `cutoff` (by committer time), without checking it out.
    pub fn last_commit_before(&self, cutoff: NaiveDate) -> Result<Option<Commit>, MinerError> {
        let limit = cutoff_epoch(cutoff);
        let mut best: Option<Commit> = None;
        for c in self.history()? {
            if c.time < limit && best.as_ref().is_none_or(|b| c.time > b.time) {
                best = Some(c);
            }
        }
        Ok(best)
    }

    /// Checks out the last commit before `cutoff`. `None` is the empty-snapshot
    /// signal: the repository has no commit before the cutoff.
    pub fn snapshot(&self, cutoff: NaiveDate) -> Result<Option<Commit>, MinerError> {
        let Some(commit) = self.last_commit_before(cutoff)? else {
            return Ok(None);
        };
        git(&self.path, &["checkout", "--quiet", "--force", "--detach", &commit.id])?;
        Ok(Some(commit))
    }

    /// Returns the working tree to where it was when the repository was opened.
    pub fn restore(&self) -> Result<(), MinerError> {
        let target = self.branch.as_deref().unwrap_or(&self.tip);
        git(&self.path, &["checkout", "--quiet", "--force", target])?;
        Ok(())
    }
}

/// Outcome of extracting methods from one snapshot.
#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub samples: Vec<Sample>,
    /// Files that could not be read (e.g. not UTF-8).
    pub unreadable_files: usize,
}

/// Stable id derived from content, so the same method gets the same id in
/// every snapshot.
pub fn content_id(project: &str, code: &str, summary: &str, name: Option<&str>) -> String {
    let mut h = Sha256::new();
    for part in [project, code, summary, name.unwrap_or("")] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..10])
}

/// Extracts every documented method under `snapshot_dir`.
pub fn extract_methods(
    snapshot_dir: &Path,
    project: &str,
    timestamp: NaiveDate,
    cfg: &MinerConfig,
) -> Extraction {
    let mut out = Extraction::default();
    let walker = WalkDir::new(snapshot_dir)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.file_name() != ".git");
    for entry in walker {
        let Ok(entry) = entry else {
            out.unreadable_files += 1;
            continue;
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let ext = entry.path().extension().and_then(|e| e.to_str()).unwrap_or("");
        if !cfg.extensions.iter().any(|x| x == ext) {
            continue;
        }
        let Ok(source) = std::fs::read_to_string(entry.path()) else {
            log::warn!("skipping unreadable file {}", entry.path().display());
            out.unreadable_files += 1;
            continue;
        };
        for m in scan_documented_methods(&source) {
            let summary = first_sentence(&strip_doc_tags(&doc_description(&m.doc), &cfg.doc_tags));
            let id = content_id(project, &m.code, &summary, Some(&m.name));
            out.samples.push(Sample::new(
                id,
                project,
                timestamp,
                m.code,
                summary,
                Some(m.name),
                cfg.task,
            ));
        }
    }
    out
}

/// Keeps, among samples identical except for their timestamp, only the
/// earliest one. Survivors keep their input order.
pub fn dedup_across_snapshots(samples: Vec<Sample>) -> Vec<Sample> {
    let mut best: HashMap<(String, String, String, Option<String>, Task), usize> = HashMap::new();
    for (i, s) in samples.iter().enumerate() {
        let key = (
            s.project.clone(),
            s.code.clone(),
            s.summary.clone(),
            s.name.clone(),
            s.task,
        );
        best.entry(key)
            .and_modify(|j| {
                let cur = &samples[*j];
                if (s.timestamp, &s.id) < (cur.timestamp, &cur.id) {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let mut keep = vec![false; samples.len()];
    for &i in best.values() {
        keep[i] = true;
    }
    samples
        .into_iter()
        .zip(keep)
        .filter_map(|(s, k)| k.then_some(s))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub project: String,
    pub cutoff: NaiveDate,
    /// `None` when the repository had no commit before the cutoff.
    pub commit: Option<Commit>,
    pub samples: usize,
    pub unreadable_files: usize,
}

/// Metadata written alongside a mined corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MineReport {
    /// Which commit timestamp selects snapshots; always `"committer"`.
    pub commit_time: String,
    pub sample_stamp: String,
    pub snapshots: Vec<SnapshotRecord>,
    pub samples_before_dedup: usize,
    pub samples: usize,
}

fn project_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Runs the full mining pipeline over every repository and cutoff.
pub fn mine(cfg: &MinerConfig) -> Result<(Corpus, MineReport), MinerError> {
    cfg.validate()?;
    let mut all = Vec::new();
    let mut snapshots = Vec::new();
    for path in &cfg.repo_paths {
        let project = project_name(path);
        let repo = Repo::open(path)?;
        let result = mine_repo(&repo, &project, cfg, &mut all, &mut snapshots);
        repo.restore()?;
        result?;
    }
    let before = all.len();
    let samples = dedup_across_snapshots(all);
    let report = MineReport {
        commit_time: "committer".into(),
        sample_stamp: "day before cutoff".into(),
        snapshots,
        samples_before_dedup: before,
        samples: samples.len(),
    };
    let tau = *cfg.cutoffs.last().expect("validated non-empty");
    Ok((Corpus::new(samples)?.with_tau(tau), report))
}

fn mine_repo(
    repo: &Repo,
    project: &str,
    cfg: &MinerConfig,
    all: &mut Vec<Sample>,
    snapshots: &mut Vec<SnapshotRecord>,
) -> Result<(), MinerError> {
    for &cutoff in &cfg.cutoffs {
        let commit = repo.snapshot(cutoff)?;
        let (samples, unreadable) = match &commit {
            Some(_) => {
                let ex = extract_methods(repo.path(), project, snapshot_stamp(cutoff), cfg);
                (ex.samples, ex.unreadable_files)
            }
            None => {
                log::info!("{project}: empty snapshot before {cutoff}");
                (Vec::new(), 0)
            }
        };
        snapshots.push(SnapshotRecord {
            project: project.to_string(),
            cutoff,
            commit,
            samples: samples.len(),
            unreadable_files: unreadable,
        });
        all.extend(samples);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn sample(code: &str, summary: &str, date: &str) -> Sample {
        let id = format!("{}@{date}", content_id("p", code, summary, None));
        Sample::new(id, "p", d(date), code, summary, None, Task::CommentGeneration)
    }

    #[test]
    fn dedup_keeps_earliest() {
        let out = dedup_across_snapshots(vec![
            sample("f() {x;}", "Does f.", "2020-12-31"),
            sample("f() {x;}", "Does f.", "2018-12-31"),
            sample("f() {x;}", "Does f.", "2019-12-31"),
        ]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].timestamp, d("2018-12-31"));
    }

    #[test]
    fn dedup_keeps_different_summaries() {
        let out = dedup_across_snapshots(vec![
            sample("f() {x;}", "Does f.", "2018-12-31"),
            sample("f() {x;}", "Does g.", "2019-12-31"),
        ]);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn config_rejects_unordered_cutoffs() {
        let cfg = MinerConfig::new(vec!["x".into()], vec![d("2020-01-01"), d("2019-01-01")]);
        assert!(cfg.validate().is_err());
        let cfg = MinerConfig::new(vec![], vec![d("2020-01-01")]);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn extract_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("A.java"),
            "class A {\n  /** Adds one. Then more. */\n  int inc(int x) { return x + 1; }\n}\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("notes.txt"), "/** Not code. */ int x() { }").unwrap();
        let cfg = MinerConfig::new(vec![dir.path().into()], vec![d("2020-01-01")]);
        let ex = extract_methods(dir.path(), "proj", d("2019-12-31"), &cfg);
        assert_eq!(ex.samples.len(), 1);
        let s = &ex.samples[0];
        assert_eq!(s.summary, "Adds one.");
        assert_eq!(s.name.as_deref(), Some("inc"));
        assert_eq!(s.code, "int inc(int x) { return x + 1; }");
        assert_eq!(s.timestamp, d("2019-12-31"));
    }
}
