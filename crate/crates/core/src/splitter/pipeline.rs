use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;

use super::clean::{clean, DuplicateIndex};
use super::group::{common_test, group, Intermediates};
use super::manifest::Provenance;
use super::segment::{cross_project_split, in_project_split, time_segment, Segment};
use super::{Methodology, MethodologyPair, MethodologySets, SplitArtifacts, SplitConfig, SplitError};
use crate::corpus::{Corpus, SampleSet};
use crate::rng::rng_for;

/// Everything the pipeline computed, stage by stage.
#[derive(Debug, Clone)]
pub struct PipelineStages {
    pub intermediates: Intermediates,
    /// Grouped sets before downsampling or cleaning; each methodology partitions the corpus.
    pub grouped: BTreeMap<Methodology, MethodologySets>,
    /// Common test sets before cleaning.
    pub testc: BTreeMap<MethodologyPair, SampleSet>,
    /// After downsampling, before cleaning.
    pub downsampled: SplitArtifacts,
    /// Final, cleaned artifacts.
    pub artifacts: SplitArtifacts,
}

/// Truncates every train set to the size of the smallest one after a seeded
/// shuffle (one independent stream per methodology). Retained ids keep their
/// original relative order; val and test sets are untouched.
pub fn downsample_trains(mut artifacts: SplitArtifacts, cfg: &SplitConfig) -> SplitArtifacts {
    let size = artifacts
        .sets
        .values()
        .map(|s| s.train.len())
        .min()
        .unwrap_or(0);
    for (m, sets) in artifacts.sets.iter_mut() {
        let mut shuffled = sets.train.ids.clone();
        shuffled.sort();
        shuffled.shuffle(&mut rng_for(cfg.seed, &format!("downsample/{m}")));
        let keep: HashSet<&String> = shuffled[..size].iter().collect();
        let ids = sets
            .train
            .ids
            .iter()
            .filter(|id| keep.contains(id))
            .cloned()
            .collect();
        sets.train.ids = ids;
    }
    artifacts
}

/// Runs every step and keeps the intermediate results.
pub fn run_pipeline_stages(corpus: &Corpus, cfg: &SplitConfig) -> Result<PipelineStages, SplitError> {
    cfg.validate()?;
    // Step 1: time segments.
    let segments = time_segment(corpus, cfg)?;
    // Step 2: in-project split of every project segment.
    let in_splits = segments
        .iter()
        .map(|(p, segs)| {
            let parts = Segment::ALL.map(|s| in_project_split(&segs[s.index()], cfg, &format!("{p}/{}", s.label())));
            (p.clone(), parts)
        })
        .collect();
    // Step 3: cross-project split.
    let projects = cross_project_split(corpus, cfg)?;
    let intermediates = Intermediates {
        segments,
        in_splits,
        projects,
    };
    // Step 4: grouping.
    let grouped: BTreeMap<Methodology, MethodologySets> = Methodology::ALL
        .into_iter()
        .map(|m| (m, group(corpus, &intermediates, m)))
        .collect();
    // Step 5: intersections.
    let mut testc = BTreeMap::new();
    for pair in MethodologyPair::ALL {
        let (a, b) = pair.members();
        let set = common_test(&grouped[&a].tests, &grouped[&b].tests, pair, corpus, &intermediates)?;
        testc.insert(pair, set);
    }
    let provenance = Provenance {
        config: cfg.clone(),
        corpus_digest: corpus.digest(),
        corpus_size: corpus.len(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    };
    // Step 6: downsampling, then cleaning.
    let downsampled = downsample_trains(
        SplitArtifacts {
            sets: grouped.clone(),
            testc: testc.clone(),
            provenance,
        },
        cfg,
    );
    let artifacts = clean_artifacts(&downsampled, corpus, cfg);
    validate_artifacts(&artifacts, corpus).map_err(SplitError::Invariant)?;
    Ok(PipelineStages {
        intermediates,
        grouped,
        testc,
        downsampled,
        artifacts,
    })
}

/// Runs the whole pipeline and returns validated artifacts.
pub fn run_pipeline(corpus: &Corpus, cfg: &SplitConfig) -> Result<SplitArtifacts, SplitError> {
    run_pipeline_stages(corpus, cfg).map(|s| s.artifacts)
}

fn clean_artifacts(input: &SplitArtifacts, corpus: &Corpus, cfg: &SplitConfig) -> SplitArtifacts {
    let mut out = input.clone();
    for (m, sets) in out.sets.iter_mut() {
        let orig = &input.sets[m];
        sets.val = clean(&orig.val, &[&orig.train], corpus, cfg.dedup);
        sets.tests = clean(&orig.tests, &[&orig.train, &sets.val], corpus, cfg.dedup);
    }
    for (pair, set) in out.testc.iter_mut() {
        let (a, b) = pair.members();
        let (sa, sb) = (&out.sets[&a], &out.sets[&b]);
        *set = clean(
            &input.testc[pair],
            &[&sa.train, &sa.val, &sb.train, &sb.val],
            corpus,
            cfg.dedup,
        );
    }
    out
}

fn check_disjoint(name: &str, sets: &[&SampleSet], violations: &mut Vec<String>) {
    let mut owner: HashMap<&str, &str> = HashMap::new();
    for s in sets {
        for id in &s.ids {
            if let Some(prev) = owner.insert(id, &s.label) {
                if prev != s.label {
                    violations.push(format!("{name}: `{id}` is in both {prev} and {}", s.label));
                    return;
                }
            }
        }
    }
}

/// Before downsampling and cleaning, each methodology's three sets must
/// partition the corpus.
pub fn check_partition(
    grouped: &BTreeMap<Methodology, MethodologySets>,
    corpus: &Corpus,
) -> Result<(), Vec<String>> {
    let mut violations = Vec::new();
    for (m, s) in grouped {
        let all = [&s.train, &s.val, &s.tests];
        check_disjoint(m.short(), &all, &mut violations);
        let covered: usize = all.iter().map(|x| x.len()).sum();
        let union: HashSet<&String> = all.iter().flat_map(|x| &x.ids).collect();
        if covered != corpus.len() || union.len() != corpus.len() {
            violations.push(format!(
                "{m}: sets cover {} ids, corpus has {}",
                union.len(),
                corpus.len()
            ));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Checks every structural invariant of finished artifacts against `corpus`.
/// Returns all violations found.
pub fn validate_artifacts(a: &SplitArtifacts, corpus: &Corpus) -> Result<(), Vec<String>> {
    let mut v = Vec::new();
    let cfg = &a.provenance.config;
    for (name, set) in a.named_sets() {
        if !set.is_duplicate_free() {
            v.push(format!("{name}: repeated ids"));
        }
        if let Some(id) = set.ids.iter().find(|id| !corpus.contains(id)) {
            v.push(format!("{name}: `{id}` is not in the corpus"));
        }
    }
    if !v.is_empty() {
        return Err(v);
    }
    let samples = |set: &SampleSet| -> Vec<&crate::corpus::Sample> {
        set.ids.iter().filter_map(|id| corpus.get(id)).collect()
    };
    for (m, s) in &a.sets {
        check_disjoint(m.short(), &[&s.train, &s.val, &s.tests], &mut v);
    }
    // Time ordering for T.
    let t = a.of(Methodology::TimeSegmented);
    let bounds = [
        (&t.train, None, Some(cfg.tau_minus_2)),
        (&t.val, Some(cfg.tau_minus_2), Some(cfg.tau_minus_1)),
        (&t.tests, Some(cfg.tau_minus_1), Some(cfg.tau)),
    ];
    for (set, lo, hi) in bounds {
        for s in samples(set) {
            let ok = lo.is_none_or(|lo| s.timestamp >= lo) && hi.is_none_or(|hi| s.timestamp < hi);
            if !ok {
                v.push(format!("T: `{}` at {} is outside {}", s.id, s.timestamp, set.label));
                break;
            }
        }
    }
    // Project disjointness for CP.
    let cp = a.of(Methodology::CrossProject);
    let projects = |set: &SampleSet| -> HashSet<String> {
        samples(set).into_iter().map(|s| s.project.clone()).collect()
    };
    let (ptr, pva, pte) = (projects(&cp.train), projects(&cp.val), projects(&cp.tests));
    for (x, y, what) in [(&ptr, &pva, "train/val"), (&ptr, &pte, "train/tests"), (&pva, &pte, "val/tests")] {
        if let Some(p) = x.intersection(y).next() {
            v.push(format!("CP: project `{p}` appears in {what}"));
        }
    }
    // Equal train sizes.
    let sizes: Vec<usize> = a.sets.values().map(|s| s.train.len()).collect();
    if sizes.windows(2).any(|w| w[0] != w[1]) {
        v.push(format!("train sizes differ: {sizes:?}"));
    }
    // Common tests lie inside both standard tests.
    for (pair, set) in &a.testc {
        let (x, y) = pair.members();
        let (tx, ty) = (a.of(x).tests.id_set(), a.of(y).tests.id_set());
        if let Some(id) = set.ids.iter().find(|id| !tx.contains(id.as_str()) || !ty.contains(id.as_str())) {
            v.push(format!("{pair}: `{id}` is not in both standard test sets"));
        }
    }
    // No evaluation sample duplicates its reference samples.
    let dup_check = |eval: &SampleSet, refs: &[&SampleSet], v: &mut Vec<String>| {
        let index = DuplicateIndex::new(cfg.dedup, refs.iter().flat_map(|r| samples(r)));
        if let Some(s) = samples(eval).into_iter().find(|s| index.is_duplicate(s)) {
            v.push(format!("{}: `{}` duplicates a reference sample", eval.label, s.id));
        }
    };
    for s in a.sets.values() {
        dup_check(&s.val, &[&s.train], &mut v);
        dup_check(&s.tests, &[&s.train, &s.val], &mut v);
    }
    for (pair, set) in &a.testc {
        let (x, y) = pair.members();
        let (sx, sy) = (a.of(x), a.of(y));
        dup_check(set, &[&sx.train, &sx.val, &sy.train, &sy.val], &mut v);
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}
