use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{SplitConfig, SplitError};
use crate::corpus::{Corpus, SampleSet};
use crate::rng::rng_for;

/// The three time segments of a project.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Segment {
    /// `t < tau_minus_2`
    Early,
    /// `tau_minus_2 <= t < tau_minus_1`
    Middle,
    /// `tau_minus_1 <= t < tau`
    Late,
}

impl Segment {
    pub const ALL: [Segment; 3] = [Segment::Early, Segment::Middle, Segment::Late];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Segment::Early => "early",
            Segment::Middle => "middle",
            Segment::Late => "late",
        }
    }
}

/// A (train, val, test) triple.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ThreeWay<T> {
    pub train: T,
    pub val: T,
    pub test: T,
}

impl<T> ThreeWay<T> {
    pub fn as_array(&self) -> [&T; 3] {
        [&self.train, &self.val, &self.test]
    }
}

/// Per project, its samples in each time segment (indexed by [`Segment::index`]).
pub type ProjectSegments = BTreeMap<String, [SampleSet; 3]>;

/// Projects assigned to train, val and test.
pub type ProjectSplit = ThreeWay<Vec<String>>;

/// Partitions every project's samples by the two inner timestamps.
/// Every project of the corpus gets an entry, even if all segments are empty.
pub fn time_segment(corpus: &Corpus, cfg: &SplitConfig) -> Result<ProjectSegments, SplitError> {
    let mut out: ProjectSegments = corpus
        .projects()
        .iter()
        .map(|p| {
            let sets = Segment::ALL.map(|s| SampleSet::new(format!("{p}/{}", s.label()), Vec::new()));
            (p.clone(), sets)
        })
        .collect();
    for s in corpus.samples() {
        let seg = if s.timestamp >= cfg.tau {
            return Err(SplitError::AfterTau {
                id: s.id.clone(),
                timestamp: s.timestamp,
                tau: cfg.tau,
            });
        } else if s.timestamp >= cfg.tau_minus_1 {
            Segment::Late
        } else if s.timestamp >= cfg.tau_minus_2 {
            Segment::Middle
        } else {
            Segment::Early
        };
        out.get_mut(&s.project).expect("project registered")[seg.index()]
            .ids
            .push(s.id.clone());
    }
    Ok(out)
}

/// Largest-remainder apportionment of `n` items over three ratios.
/// Remainder ties go to the larger ratio, then to the earlier position.
pub fn apportion(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let mut sizes = [0usize; 3];
    let mut fracs = [0f64; 3];
    for i in 0..3 {
        let quota = n as f64 * ratios[i];
        let mut floor = quota.floor();
        let mut frac = quota - floor;
        // Absorb floating-point noise such as 0.7 * 10 = 7.000000000000001.
        if frac > 1.0 - 1e-9 {
            floor += 1.0;
            frac = 0.0;
        } else if frac < 1e-9 {
            frac = 0.0;
        }
        sizes[i] = floor as usize;
        // Quantized so that equal remainders compare equal despite rounding.
        fracs[i] = (frac * 1e9).round();
    }
    let assigned: usize = sizes.iter().sum();
    let mut remaining = n.saturating_sub(assigned);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        fracs[b]
            .total_cmp(&fracs[a])
            .then(ratios[b].total_cmp(&ratios[a]))
            .then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        sizes[i] += 1;
        remaining -= 1;
    }
    // Noise absorption can overshoot by one; take it back from the smallest fraction.
    while sizes.iter().sum::<usize>() > n {
        let i = *order.iter().rev().find(|&&i| sizes[i] > 0).expect("n > 0 here");
        sizes[i] -= 1;
    }
    sizes
}

/// Seeded shuffle of one project-segment followed by a contiguous cut.
/// `stream` names the random stream, so distinct segments get independent shuffles.
pub fn in_project_split(segment: &SampleSet, cfg: &SplitConfig, stream: &str) -> ThreeWay<SampleSet> {
    let mut ids = segment.ids.clone();
    ids.sort();
    ids.shuffle(&mut rng_for(cfg.seed, &format!("in-project/{stream}")));
    let [a, b, _] = apportion(ids.len(), cfg.ratios());
    let test = ids.split_off(a + b);
    let val = ids.split_off(a);
    let label = &segment.label;
    ThreeWay {
        train: SampleSet::new(format!("{label}/train"), ids),
        val: SampleSet::new(format!("{label}/val"), val),
        test: SampleSet::new(format!("{label}/test"), test),
    }
}

const BUCKET_PRIORITY: [usize; 3] = [0, 2, 1];

/// Assigns whole projects to train/val/test so that their sample counts
/// approach the configured ratios.
///
/// Projects are shuffled with the seed, then stably ordered largest first;
/// each goes to the bucket with the lowest fill (current count over target
/// count). Fill ties prefer train, then test, then val. Buckets with a zero
/// target never receive projects.
pub fn cross_project_split(corpus: &Corpus, cfg: &SplitConfig) -> Result<ProjectSplit, SplitError> {
    let mut counts: BTreeMap<&str, usize> =
        corpus.projects().iter().map(|p| (p.as_str(), 0)).collect();
    for s in corpus.samples() {
        *counts.get_mut(s.project.as_str()).expect("project registered") += 1;
    }
    let weights: Vec<(String, usize)> = counts.iter().map(|(p, c)| (p.to_string(), *c)).collect();
    split_weighted_projects(weights, cfg)
}

/// [`cross_project_split`] over explicit `(project, sample count)` pairs.
pub(crate) fn split_weighted_projects(
    mut projects: Vec<(String, usize)>,
    cfg: &SplitConfig,
) -> Result<ProjectSplit, SplitError> {
    if projects.len() < 3 {
        return Err(SplitError::TooFewProjects(projects.len()));
    }
    projects.sort();
    projects.shuffle(&mut rng_for(cfg.seed, "cross-project"));
    projects.sort_by_key(|p| std::cmp::Reverse(p.1));
    let total: usize = projects.iter().map(|p| p.1).sum();
    // With no samples at all every project weighs the same.
    let weight = |c: usize| if total == 0 { 1.0 } else { c as f64 };
    let total_w: f64 = projects.iter().map(|p| weight(p.1)).sum();
    let targets = cfg.ratios().map(|r| r * total_w);
    let mut filled = [0f64; 3];
    let mut buckets: [Vec<String>; 3] = Default::default();
    for (name, count) in projects {
        let best = BUCKET_PRIORITY
            .into_iter()
            .filter(|&b| targets[b] > 0.0)
            .min_by(|&a, &b| (filled[a] / targets[a]).total_cmp(&(filled[b] / targets[b])))
            .expect("at least one ratio is positive");
        filled[best] += weight(count);
        buckets[best].push(name);
    }
    let [mut train, mut val, mut test] = buckets;
    train.sort();
    val.sort();
    test.sort();
    Ok(ThreeWay { train, val, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sample, Task};
    use chrono::NaiveDate;

    fn cfg() -> SplitConfig {
        SplitConfig::yearly_2019_2021(7)
    }

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn sample(id: &str, project: &str, t: NaiveDate) -> Sample {
        Sample::new(id, project, t, format!("f{id}() {{ x; }}"), "Does it.", None, Task::CommentGeneration)
    }

    #[test]
    fn segment_boundaries() {
        let corpus = Corpus::new(vec![
            sample("a", "p", d(2018, 6, 1)),
            sample("b", "p", d(2019, 1, 1)),
            sample("c", "p", d(2019, 12, 31)),
            sample("e", "p", d(2020, 1, 1)),
        ])
        .unwrap();
        let segs = time_segment(&corpus, &cfg()).unwrap();
        let p = &segs["p"];
        assert_eq!(p[0].ids, ["a"]);
        assert_eq!(p[1].ids, ["b", "c"]);
        assert_eq!(p[2].ids, ["e"]);
    }

    #[test]
    fn segment_rejects_tau() {
        let corpus = Corpus::new(vec![sample("a", "p", d(2021, 1, 1))]).unwrap();
        assert!(matches!(time_segment(&corpus, &cfg()), Err(SplitError::AfterTau { .. })));
    }

    #[test]
    fn segment_empty_corpus() {
        assert!(time_segment(&Corpus::default(), &cfg()).unwrap().is_empty());
    }

    /// Independent oracle: assign remainders one at a time to the largest
    /// outstanding fractional quota, using exact rational arithmetic on
    /// ratios expressed in percent.
    fn apportion_oracle(n: usize, pct: [usize; 3]) -> [usize; 3] {
        let mut sizes = pct.map(|p| n * p / 100);
        let mut rem: Vec<(usize, usize, usize)> =
            (0..3).map(|i| ((n * pct[i]) % 100, pct[i], i)).collect();
        rem.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        let left = n - sizes.iter().sum::<usize>();
        for k in 0..left {
            sizes[rem[k].2] += 1;
        }
        sizes
    }

    #[test]
    fn apportion_examples() {
        let r = [0.7, 0.1, 0.2];
        assert_eq!(apportion(10, r), [7, 1, 2]);
        assert_eq!(apportion(1, r), [1, 0, 0]);
        assert_eq!(apportion(0, r), [0, 0, 0]);
        for n in 0..500 {
            assert_eq!(apportion(n, r), apportion_oracle(n, [70, 10, 20]), "n={n}");
            assert_eq!(apportion(n, [0.8, 0.1, 0.1]), apportion_oracle(n, [80, 10, 10]), "n={n}");
        }
    }

    #[test]
    fn in_project_sizes() {
        let set = SampleSet::new("s", (0..10).map(|i| i.to_string()).collect());
        let parts = in_project_split(&set, &cfg(), "x");
        assert_eq!((parts.train.len(), parts.val.len(), parts.test.len()), (7, 1, 2));
        let one = in_project_split(&SampleSet::new("s", vec!["a".into()]), &cfg(), "x");
        assert_eq!(one.train.ids, ["a"]);
        let none = in_project_split(&SampleSet::default(), &cfg(), "x");
        assert!(none.train.is_empty() && none.val.is_empty() && none.test.is_empty());
    }

    /// Exhaustive oracle: the assignment of 3 projects (each bucket non-empty
    /// or not) minimizing the squared deviation from target ratios.
    fn best_assignment(counts: &[usize], ratios: [f64; 3]) -> Vec<usize> {
        let total: usize = counts.iter().sum();
        let mut best = (f64::INFINITY, vec![]);
        let k = counts.len();
        for code in 0..3usize.pow(k as u32) {
            let mut assign = Vec::with_capacity(k);
            let mut c = code;
            for _ in 0..k {
                assign.push(c % 3);
                c /= 3;
            }
            let mut sums = [0f64; 3];
            for (i, &b) in assign.iter().enumerate() {
                sums[b] += counts[i] as f64;
            }
            let dev: f64 = (0..3).map(|b| (sums[b] / total as f64 - ratios[b]).powi(2)).sum();
            if dev < best.0 {
                best = (dev, assign);
            }
        }
        best.1
    }

    #[test]
    fn cross_project_matches_exhaustive_oracle() {
        let counts = [70, 10, 20];
        let oracle = best_assignment(&counts, [0.7, 0.1, 0.2]);
        assert_eq!(oracle, [0, 1, 2]);
        for seed in 0..20 {
            let mut c = cfg();
            c.seed = seed;
            let projects = vec![("a".into(), 70), ("b".into(), 10), ("c".into(), 20)];
            let split = split_weighted_projects(projects, &c).unwrap();
            assert_eq!(split.train, ["a"]);
            assert_eq!(split.val, ["b"]);
            assert_eq!(split.test, ["c"]);
        }
    }

    #[test]
    fn cross_project_equal_sizes() {
        for seed in 0..20 {
            let mut c = cfg();
            c.seed = seed;
            let projects = (0..10).map(|i| (format!("p{i}"), 10)).collect();
            let split = split_weighted_projects(projects, &c).unwrap();
            assert_eq!((split.train.len(), split.val.len(), split.test.len()), (7, 1, 2));
        }
    }

    #[test]
    fn cross_project_needs_three() {
        let projects = vec![("a".into(), 1), ("b".into(), 1)];
        assert!(matches!(
            split_weighted_projects(projects, &cfg()),
            Err(SplitError::TooFewProjects(2))
        ));
    }
}
