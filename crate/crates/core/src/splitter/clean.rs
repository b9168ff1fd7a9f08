use std::collections::{BTreeMap, HashSet};

use super::{DedupConfig, DedupMode};
use crate::corpus::{Corpus, Sample, SampleSet};

/// Fraction of aligned positions holding equal subtokens, over the longer length.
pub fn positional_similarity(a: &[String], b: &[String]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    same as f64 / longest as f64
}

/// Reference samples indexed for duplicate lookup under one [`DedupConfig`].
pub struct DuplicateIndex<'c> {
    cfg: DedupConfig,
    pairs: HashSet<(&'c [String], &'c [String])>,
    codes: HashSet<&'c [String]>,
    summaries: HashSet<&'c [String]>,
    /// For near-duplicates: reference samples bucketed by code length.
    by_code_len: BTreeMap<usize, Vec<&'c Sample>>,
}

impl<'c> DuplicateIndex<'c> {
    pub fn new(cfg: DedupConfig, references: impl IntoIterator<Item = &'c Sample>) -> Self {
        let mut idx = DuplicateIndex {
            cfg,
            pairs: HashSet::new(),
            codes: HashSet::new(),
            summaries: HashSet::new(),
            by_code_len: BTreeMap::new(),
        };
        for s in references {
            match cfg.mode {
                DedupMode::ExactPair => {
                    idx.pairs.insert((&s.code_subtokens, &s.summary_subtokens));
                }
                DedupMode::SameCode => {
                    idx.codes.insert(&s.code_subtokens);
                }
                DedupMode::SameNl => {
                    idx.summaries.insert(&s.summary_subtokens);
                }
                DedupMode::Sim90 => idx
                    .by_code_len
                    .entry(s.code_subtokens.len())
                    .or_default()
                    .push(s),
            }
        }
        idx
    }

    pub fn is_duplicate(&self, s: &Sample) -> bool {
        match self.cfg.mode {
            DedupMode::ExactPair => self
                .pairs
                .contains(&(s.code_subtokens.as_slice(), s.summary_subtokens.as_slice())),
            DedupMode::SameCode => self.codes.contains(s.code_subtokens.as_slice()),
            DedupMode::SameNl => self.summaries.contains(s.summary_subtokens.as_slice()),
            DedupMode::Sim90 => {
                let t = self.cfg.threshold;
                let len = s.code_subtokens.len() as f64;
                // similarity <= shorter/longer, so only lengths within a factor of t can pass
                let lo = (len * t).floor() as usize;
                let hi = if t > 0.0 { (len / t).ceil() as usize } else { usize::MAX };
                self.by_code_len
                    .range(lo..=hi)
                    .flat_map(|(_, v)| v)
                    .any(|r| {
                        positional_similarity(&s.code_subtokens, &r.code_subtokens) > t
                            && positional_similarity(&s.summary_subtokens, &r.summary_subtokens) > t
                    })
            }
        }
    }
}

/// Removes evaluation samples that duplicate any reference sample.
/// Surviving ids keep their order.
pub fn clean(
    eval_set: &SampleSet,
    reference_sets: &[&SampleSet],
    corpus: &Corpus,
    dedup: DedupConfig,
) -> SampleSet {
    let refs = reference_sets
        .iter()
        .flat_map(|set| set.ids.iter())
        .filter_map(|id| corpus.get(id));
    let index = DuplicateIndex::new(dedup, refs);
    let ids = eval_set
        .ids
        .iter()
        .filter(|id| corpus.get(id).is_some_and(|s| !index.is_duplicate(s)))
        .cloned()
        .collect();
    SampleSet::new(eval_set.label.clone(), ids)
}
