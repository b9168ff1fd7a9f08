use std::collections::{BTreeMap, HashSet};

use super::segment::{ProjectSegments, ProjectSplit, Segment, ThreeWay};
use super::{Methodology, MethodologyPair, MethodologySets, SplitError};
use crate::corpus::{Corpus, SampleSet};

/// Outputs of the segmentation and splitting steps that grouping and the
/// common-test closed forms are computed from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Intermediates {
    pub segments: ProjectSegments,
    /// Per project, the in-project split of each time segment.
    pub in_splits: BTreeMap<String, [ThreeWay<SampleSet>; 3]>,
    pub projects: ProjectSplit,
}

/// Collects ids and returns them in corpus order.
pub(crate) fn in_corpus_order<'a>(
    corpus: &Corpus,
    ids: impl IntoIterator<Item = &'a String>,
) -> Vec<String> {
    let mut v: Vec<(usize, &String)> = ids
        .into_iter()
        .map(|id| (corpus.position(id).expect("ids come from the corpus"), id))
        .collect();
    v.sort_unstable();
    v.dedup();
    v.into_iter().map(|(_, id)| id.clone()).collect()
}

fn union_of<'a>(
    corpus: &Corpus,
    label: String,
    sets: impl IntoIterator<Item = &'a SampleSet>,
) -> SampleSet {
    SampleSet::new(label, in_corpus_order(corpus, sets.into_iter().flat_map(|s| &s.ids)))
}

/// Builds one methodology's train, val and standard test sets.
pub fn group(corpus: &Corpus, inter: &Intermediates, methodology: Methodology) -> MethodologySets {
    let m = methodology.short();
    let label = |kind: &str| format!("{m}/{kind}");
    match methodology {
        Methodology::MixedProject => {
            let part = |pick: fn(&ThreeWay<SampleSet>) -> &SampleSet| {
                inter.in_splits.values().flat_map(move |segs| segs.iter().map(pick))
            };
            MethodologySets {
                train: union_of(corpus, label("train"), part(|t| &t.train)),
                val: union_of(corpus, label("val"), part(|t| &t.val)),
                tests: union_of(corpus, label("tests"), part(|t| &t.test)),
            }
        }
        Methodology::CrossProject => {
            let whole = |projects: &Vec<String>| -> Vec<&SampleSet> {
                projects
                    .iter()
                    .flat_map(|p| inter.segments[p].iter())
                    .collect()
            };
            MethodologySets {
                train: union_of(corpus, label("train"), whole(&inter.projects.train)),
                val: union_of(corpus, label("val"), whole(&inter.projects.val)),
                tests: union_of(corpus, label("tests"), whole(&inter.projects.test)),
            }
        }
        Methodology::TimeSegmented => {
            let seg = |s: Segment| inter.segments.values().map(move |segs| &segs[s.index()]);
            MethodologySets {
                train: union_of(corpus, label("train"), seg(Segment::Early)),
                val: union_of(corpus, label("val"), seg(Segment::Middle)),
                tests: union_of(corpus, label("tests"), seg(Segment::Late)),
            }
        }
    }
}

/// Closed-form common test set of a pair, computed directly from the
/// intermediates rather than by intersecting test sets:
///
/// * MP and CP: in-project test parts of every segment of the test projects.
/// * MP and T: in-project test parts of the late segment of every project.
/// * CP and T: the whole late segment of the test projects.
pub fn closed_form_testc(corpus: &Corpus, inter: &Intermediates, pair: MethodologyPair) -> SampleSet {
    let label = format!("{pair}/testc");
    let test_projects = inter.projects.test.iter();
    match pair {
        MethodologyPair::MpCp => union_of(
            corpus,
            label,
            test_projects.flat_map(|p| inter.in_splits[p].iter().map(|t| &t.test)),
        ),
        MethodologyPair::MpT => union_of(
            corpus,
            label,
            inter
                .in_splits
                .values()
                .map(|segs| &segs[Segment::Late.index()].test),
        ),
        MethodologyPair::CpT => union_of(
            corpus,
            label,
            test_projects.map(|p| &inter.segments[p][Segment::Late.index()]),
        ),
    }
}

/// Intersection of two standard test sets, cross-checked against the closed form.
pub fn common_test(
    tests_a: &SampleSet,
    tests_b: &SampleSet,
    pair: MethodologyPair,
    corpus: &Corpus,
    inter: &Intermediates,
) -> Result<SampleSet, SplitError> {
    let in_b = tests_b.id_set();
    let ids: Vec<String> = tests_a
        .ids
        .iter()
        .filter(|id| in_b.contains(id.as_str()))
        .cloned()
        .collect();
    let ids = in_corpus_order(corpus, &ids);
    let expected = closed_form_testc(corpus, inter, pair);
    if ids != expected.ids {
        let got: HashSet<&String> = ids.iter().collect();
        let want: HashSet<&String> = expected.ids.iter().collect();
        return Err(SplitError::ClosedFormMismatch {
            pair,
            detail: format!(
                "intersection has {} ids, closed form {}; {} only in intersection, {} only in closed form",
                got.len(),
                want.len(),
                got.difference(&want).count(),
                want.difference(&got).count()
            ),
        });
    }
    Ok(SampleSet::new(format!("{pair}/testc"), ids))
}
