//! Synthetic corpora with per-project vocabulary, time drift and clones.
//!
//! Each project owns a few "concepts": a code token signature and a summary.
//! Originals instantiate a concept with positional noise plus one fresh
//! token, so no two originals share code subtokens. At every segment boundary
//! each concept token is swapped for a never-seen word with probability
//! `vocab_drift`. Clones copy an earlier sample of the same project verbatim
//! up to whitespace, so their subtokens match exactly.

use std::collections::{BTreeMap, HashSet};

use chrono::{Days, NaiveDate};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corpus::{Corpus, Sample, Task};
use crate::rng::rng_for;

/// Segment date ranges `[start, end)`; the corpus is collected at the last end.
pub const SYNTH_SEGMENTS: [(i32, i32); 3] = [(2017, 2019), (2019, 2020), (2020, 2021)];

pub fn synth_boundaries() -> [NaiveDate; 3] {
    let d = |y| NaiveDate::from_ymd_opt(y, 1, 1).expect("valid date");
    [d(2019), d(2020), d(2021)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_projects: usize,
    pub samples_per_project_per_segment: usize,
    pub vocab_drift: f64,
    pub clone_rate: f64,
    pub seed: u64,
    pub concepts_per_project: usize,
    pub code_len: usize,
    pub summary_len: usize,
    /// Probability that a code position is replaced by project filler.
    pub code_noise: f64,
    pub task: Task,
}

impl SynthConfig {
    pub fn new(n_projects: usize, samples_per_project_per_segment: usize, seed: u64) -> Self {
        SynthConfig {
            n_projects,
            samples_per_project_per_segment,
            vocab_drift: 0.3,
            clone_rate: 0.0,
            seed,
            concepts_per_project: 6,
            code_len: 10,
            summary_len: 3,
            code_noise: 0.2,
            task: Task::CommentGeneration,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        for (name, p) in [
            ("vocab_drift", self.vocab_drift),
            ("clone_rate", self.clone_rate),
            ("code_noise", self.code_noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        for (name, n) in [
            ("n_projects", self.n_projects),
            ("samples_per_project_per_segment", self.samples_per_project_per_segment),
            ("concepts_per_project", self.concepts_per_project),
            ("code_len", self.code_len),
            ("summary_len", self.summary_len),
        ] {
            if n == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        // Dates within a project segment are distinct.
        if self.samples_per_project_per_segment > 366 {
            return bad("samples_per_project_per_segment must be at most 366".into());
        }
        Ok(())
    }
}

/// A generated corpus and, for every clone, the id of the original it copies.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub clone_root: BTreeMap<String, String>,
}

impl SynthCorpus {
    /// Id of the original a sample descends from (itself for originals).
    pub fn root_of<'a>(&'a self, id: &'a str) -> &'a str {
        self.clone_root.get(id).map_or(id, |r| r.as_str())
    }
}

const ONSETS: [&str; 16] = [
    "b", "c", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

struct Vocab {
    used: HashSet<String>,
}

impl Vocab {
    /// A lowercase letter-only word never returned before.
    fn fresh(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let syllables = rng.gen_range(2..=4);
            let w: String = (0..syllables)
                .map(|_| {
                    format!(
                        "{}{}",
                        ONSETS.choose(rng).expect("non-empty"),
                        VOWELS.choose(rng).expect("non-empty")
                    )
                })
                .collect();
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

struct Concept {
    code: Vec<String>,
    summary: Vec<String>,
}

struct Slot {
    date: NaiveDate,
    code: Vec<String>,
    summary: Vec<String>,
}

fn camel(words: &[String]) -> String {
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i == 0 {
            out.push_str(w);
        } else {
            let mut c = w.chars();
            if let Some(f) = c.next() {
                out.extend(f.to_uppercase());
                out.push_str(c.as_str());
            }
        }
    }
    out
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Corpus, HarnessError> {
    generate_synthetic_with_provenance(cfg).map(|s| s.corpus)
}

pub fn generate_synthetic_with_provenance(cfg: &SynthConfig) -> Result<SynthCorpus, HarnessError> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, "synth");
    let mut vocab = Vocab { used: HashSet::new() };
    let mut samples = Vec::new();
    let mut clone_root = BTreeMap::new();
    let width = cfg.n_projects.to_string().len().max(2);
    for p in 0..cfg.n_projects {
        let project = format!("proj{p:0width$}");
        let filler: Vec<String> = (0..cfg.code_len * 2).map(|_| vocab.fresh(&mut rng)).collect();
        let mut concepts: Vec<Concept> = (0..cfg.concepts_per_project)
            .map(|_| Concept {
                code: (0..cfg.code_len).map(|_| vocab.fresh(&mut rng)).collect(),
                summary: (0..cfg.summary_len).map(|_| vocab.fresh(&mut rng)).collect(),
            })
            .collect();
        let mut slots: Vec<Slot> = Vec::new();
        for (seg, &(start, end)) in SYNTH_SEGMENTS.iter().enumerate() {
            if seg > 0 {
                for c in &mut concepts {
                    for tok in c.code.iter_mut().chain(c.summary.iter_mut()) {
                        if rng.gen_bool(cfg.vocab_drift) {
                            *tok = vocab.fresh(&mut rng);
                        }
                    }
                }
            }
            let first = NaiveDate::from_ymd_opt(start, 1, 1).expect("valid date");
            let last = NaiveDate::from_ymd_opt(end, 1, 1).expect("valid date");
            let days = (last - first).num_days() as usize;
            let mut offsets = index::sample(&mut rng, days, cfg.samples_per_project_per_segment).into_vec();
            offsets.sort_unstable();
            for off in offsets {
                let concept = &concepts[rng.gen_range(0..concepts.len())];
                let mut code: Vec<String> = concept
                    .code
                    .iter()
                    .map(|t| {
                        if rng.gen_bool(cfg.code_noise) {
                            filler.choose(&mut rng).expect("non-empty").clone()
                        } else {
                            t.clone()
                        }
                    })
                    .collect();
                code.push(vocab.fresh(&mut rng));
                slots.push(Slot {
                    date: first + Days::new(off as u64),
                    code,
                    summary: concept.summary.clone(),
                });
            }
        }
        // Chronological pass: each slot after the first may become a clone.
        let mut family_size: Vec<usize> = Vec::new();
        let mut root_index: Vec<usize> = Vec::new();
        for i in 0..slots.len() {
            let id = format!("{project}-{i:05}");
            let (code, summary, variant) = if i > 0 && rng.gen_bool(cfg.clone_rate) {
                let j = rng.gen_range(0..i);
                let r = root_index[j];
                family_size[r] += 1;
                root_index.push(r);
                family_size.push(0);
                clone_root.insert(id.clone(), format!("{project}-{r:05}"));
                let (code, summary) = (slots[r].code.clone(), slots[r].summary.clone());
                (code, summary, family_size[r])
            } else {
                root_index.push(i);
                family_size.push(1);
                (slots[i].code.clone(), slots[i].summary.clone(), 0)
            };
            // Clones differ from their root only in the whitespace after the first token.
            let mut text = code[0].clone();
            text.push_str(&" ".repeat(variant + 1));
            text.push_str(&code[1..].join(" "));
            let name = match cfg.task {
                Task::MethodNaming => Some(camel(&summary)),
                Task::CommentGeneration => None,
            };
            samples.push(Sample::new(
                id,
                project.clone(),
                slots[i].date,
                format!("{text};"),
                format!("{}.", summary.join(" ")),
                name,
                cfg.task,
            ));
        }
    }
    let corpus = Corpus::new(samples)?.with_tau(synth_boundaries()[2]);
    Ok(SynthCorpus { corpus, clone_root })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig::new(4, 10, seed)
    }

    #[test]
    fn deterministic_and_valid() {
        let a = generate_synthetic(&small(3)).unwrap();
        let b = generate_synthetic(&small(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 120);
        assert_eq!(a.projects().len(), 4);
        a.validate().unwrap();
        assert_ne!(a, generate_synthetic(&small(4)).unwrap());
    }

    #[test]
    fn no_clones_means_distinct_pairs() {
        let c = generate_synthetic(&small(5)).unwrap();
        let pairs: HashSet<_> = c
            .samples()
            .iter()
            .map(|s| (&s.code_subtokens, &s.summary_subtokens))
            .collect();
        assert_eq!(pairs.len(), c.len());
    }

    #[test]
    fn full_clone_rate() {
        let cfg = SynthConfig { clone_rate: 1.0, ..small(6) };
        let s = generate_synthetic_with_provenance(&cfg).unwrap();
        s.corpus.validate().unwrap();
        for p in s.corpus.projects() {
            let mine: Vec<&Sample> = s.corpus.samples().iter().filter(|x| &x.project == p).collect();
            for (k, x) in mine.iter().enumerate() {
                if k == 0 {
                    assert!(!s.clone_root.contains_key(&x.id));
                    continue;
                }
                let root = s.corpus.get(s.root_of(&x.id)).unwrap();
                assert!(root.timestamp < x.timestamp);
                assert_eq!(root.code_subtokens, x.code_subtokens);
                assert_eq!(root.summary_subtokens, x.summary_subtokens);
            }
        }
    }

    #[test]
    fn timestamps_follow_segments() {
        let c = generate_synthetic(&small(7)).unwrap();
        let [t2, t1, t] = synth_boundaries();
        for p in c.projects() {
            let dates: Vec<NaiveDate> =
                c.samples().iter().filter(|s| &s.project == p).map(|s| s.timestamp).collect();
            assert!(dates.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(dates.iter().filter(|d| **d < t2).count(), 10);
            assert_eq!(dates.iter().filter(|d| **d >= t2 && **d < t1).count(), 10);
            assert!(dates.iter().all(|d| *d < t));
        }
    }

    #[test]
    fn method_naming_names() {
        let cfg = SynthConfig { task: Task::MethodNaming, ..small(8) };
        let c = generate_synthetic(&cfg).unwrap();
        let s = &c.samples()[0];
        assert_eq!(s.summary_subtokens.len(), 3);
        assert_eq!(crate::corpus::subtokenize(s.name.as_deref().unwrap()), s.summary_subtokens);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate_synthetic(&SynthConfig { clone_rate: 1.5, ..small(1) }).is_err());
        assert!(generate_synthetic(&SynthConfig { n_projects: 0, ..small(1) }).is_err());
    }
}
