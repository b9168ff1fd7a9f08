use std::collections::HashSet;

use codesum_eval::corpus::SampleSet;
use codesum_eval::harness::{generate_synthetic_with_provenance, train_model, ModelSpec, SynthConfig, SynthCorpus};
use codesum_eval::metrics::evaluate_set;
use codesum_eval::splitter::{clean, run_pipeline_stages, Methodology, MethodologyPair, SplitConfig};

fn synth(seed: u64, clone_rate: f64) -> SynthCorpus {
    let mut cfg = SynthConfig::new(10, 15, seed);
    cfg.clone_rate = clone_rate;
    generate_synthetic_with_provenance(&cfg).unwrap()
}

fn roots<'a>(s: &'a SynthCorpus, sets: &[&'a SampleSet]) -> HashSet<&'a str> {
    sets.iter().flat_map(|x| x.ids.iter()).map(|id| s.root_of(id)).collect()
}

/// Removal oracle from clone provenance: an evaluation sample goes iff some
/// reference sample shares its root.
fn oracle_clean(s: &SynthCorpus, eval: &SampleSet, refs: &[&SampleSet]) -> SampleSet {
    let r = roots(s, refs);
    SampleSet::new(
        eval.label.clone(),
        eval.ids.iter().filter(|id| !r.contains(s.root_of(id))).cloned().collect(),
    )
}

#[test]
fn exact_pair_cleaning_removes_exactly_the_clones() {
    for seed in 0..5 {
        let s = synth(seed, 0.1);
        let stages = run_pipeline_stages(&s.corpus, &SplitConfig::yearly_2019_2021(seed)).unwrap();
        let before = &stages.downsampled;
        let after = &stages.artifacts;
        for m in Methodology::ALL {
            let (b, a) = (before.of(m), after.of(m));
            let val = oracle_clean(&s, &b.val, &[&b.train]);
            assert_eq!(a.val.ids, val.ids, "{m} val");
            let tests = oracle_clean(&s, &b.tests, &[&b.train, &val]);
            assert_eq!(a.tests.ids, tests.ids, "{m} tests");
        }
        for pair in MethodologyPair::ALL {
            let (x, y) = pair.members();
            let (ax, ay) = (after.of(x), after.of(y));
            let tc = oracle_clean(&s, before.common(pair), &[&ax.train, &ax.val, &ay.train, &ay.val]);
            assert_eq!(after.common(pair).ids, tc.ids, "{pair}");
        }
    }
}

#[test]
fn removing_train_clones_never_helps_retrieval() {
    for seed in 0..4 {
        let s = synth(seed, 0.3);
        let stages = run_pipeline_stages(&s.corpus, &SplitConfig::yearly_2019_2021(seed)).unwrap();
        let cfg = stages.downsampled.provenance.config.dedup;
        for m in Methodology::ALL {
            let sets = stages.downsampled.of(m);
            let model = train_model(ModelSpec::Retrieval, &sets.train, &s.corpus).unwrap();
            let cleaned = clean(&sets.tests, &[&sets.train], &s.corpus, cfg);
            let score = |set: &SampleSet| {
                let preds = model.predict_set(set, &s.corpus).unwrap();
                evaluate_set("r", &preds, set, &s.corpus).unwrap().aggregates.get("em").copied()
            };
            if let (Some(raw), Some(clean)) = (score(&sets.tests), score(&cleaned)) {
                assert!(clean <= raw + 1e-12, "{m}: cleaned {clean} > raw {raw}");
            }
        }
    }
}
