//! Sample filters, method-name masking, and corpus statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{subtokenize, Corpus, CorpusError, Sample, Task};
use crate::javascan::{has_statement_text, method_body, strip_doc_tags, DocTagConfig};

pub const DEFAULT_MAX_CODE_CHARS: usize = 10_000;
pub const NAME_MASK: &str = "METHODNAMEMASK";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("sample `{0}` has no method name to mask")]
    MissingName(String),
    #[error("corpus mixes comment-generation and method-naming samples")]
    MixedTasks,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Why a sample was discarded. Declaration order is the order checks are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    NonEnglishCode,
    NonEnglishComment,
    CodeTooLong,
    EmptyBody,
    EmptyComment,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub non_english_code: usize,
    pub non_english_comment: usize,
    pub code_too_long: usize,
    pub empty_body: usize,
    pub empty_comment: usize,
    pub retained: usize,
}

impl FilterReport {
    pub fn removed(&self) -> usize {
        self.non_english_code
            + self.non_english_comment
            + self.code_too_long
            + self.empty_body
            + self.empty_comment
    }

    fn count(&mut self, reason: FilterReason) {
        let slot = match reason {
            FilterReason::NonEnglishCode => &mut self.non_english_code,
            FilterReason::NonEnglishComment => &mut self.non_english_comment,
            FilterReason::CodeTooLong => &mut self.code_too_long,
            FilterReason::EmptyBody => &mut self.empty_body,
            FilterReason::EmptyComment => &mut self.empty_comment,
        };
        *slot += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub max_code_chars: usize,
    pub doc_tags: DocTagConfig,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            max_code_chars: DEFAULT_MAX_CODE_CHARS,
            doc_tags: DocTagConfig::default(),
        }
    }
}

/// Printable ASCII plus tab, newline and carriage return.
fn is_english_text(s: &str) -> bool {
    s.bytes()
        .all(|b| (0x20..=0x7e).contains(&b) || matches!(b, b'\t' | b'\n' | b'\r'))
}

/// The first filter a sample fails, if any.
pub fn filter_reason(sample: &Sample, cfg: &FilterConfig) -> Option<FilterReason> {
    if !is_english_text(&sample.code) {
        return Some(FilterReason::NonEnglishCode);
    }
    if !is_english_text(&sample.summary) {
        return Some(FilterReason::NonEnglishComment);
    }
    if sample.code.chars().count() > cfg.max_code_chars {
        return Some(FilterReason::CodeTooLong);
    }
    if !method_body(&sample.code).is_some_and(has_statement_text) {
        return Some(FilterReason::EmptyBody);
    }
    let stripped = strip_doc_tags(&sample.summary, &cfg.doc_tags);
    if !stripped.chars().any(|c| c.is_ascii_alphanumeric()) {
        return Some(FilterReason::EmptyComment);
    }
    None
}

pub fn filter_corpus(corpus: &Corpus, cfg: &FilterConfig) -> Result<(Corpus, FilterReport), IngestError> {
    let mut report = FilterReport::default();
    let mut kept = Vec::new();
    for s in corpus.samples() {
        match filter_reason(s, cfg) {
            Some(reason) => report.count(reason),
            None => kept.push(s.clone()),
        }
    }
    report.retained = kept.len();
    let mut out = Corpus::new(kept)?;
    out.tau = corpus.tau;
    Ok((out, report))
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

/// Replaces every standalone occurrence of `name` in `code`.
pub fn mask_identifier(code: &str, name: &str, mask: &str) -> String {
    if name.is_empty() {
        return code.to_string();
    }
    let bytes = code.as_bytes();
    let mut out = String::with_capacity(code.len());
    let mut last = 0;
    let mut from = 0;
    while let Some(p) = code[from..].find(name) {
        let start = from + p;
        let end = start + name.len();
        let left_ok = start == 0 || !is_ident_byte(bytes[start - 1]);
        let right_ok = end == bytes.len() || !is_ident_byte(bytes[end]);
        if left_ok && right_ok {
            out.push_str(&code[last..start]);
            out.push_str(mask);
            last = end;
        }
        from = start + 1;
        while !code.is_char_boundary(from) {
            from += 1;
        }
    }
    out.push_str(&code[last..]);
    out
}

/// Hides the method's own name in its code; the summary becomes the name.
pub fn mask_method_name(sample: &Sample) -> Result<Sample, IngestError> {
    let name = sample
        .name
        .as_deref()
        .filter(|n| !n.is_empty())
        .ok_or_else(|| IngestError::MissingName(sample.id.clone()))?;
    let code = mask_identifier(&sample.code, name, NAME_MASK);
    let mut out = sample.clone();
    out.code_subtokens = subtokenize(&code);
    out.code = code;
    out.summary_subtokens = subtokenize(name);
    out.task = Task::MethodNaming;
    Ok(out)
}

/// Masks every sample and relabels the corpus as a method-naming corpus.
pub fn mask_corpus(corpus: &Corpus) -> Result<Corpus, IngestError> {
    let samples = corpus
        .samples()
        .iter()
        .map(mask_method_name)
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Corpus::new(samples)?;
    out.tau = corpus.tau;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub task: Task,
    pub num_samples: usize,
    pub avg_code_subtokens: f64,
    /// `(threshold, fraction of samples with at most that many code subtokens)`.
    pub code_subtokens_at_most: Vec<(usize, f64)>,
    pub avg_summary_subtokens: f64,
    pub summary_subtokens_at_most: Vec<(usize, f64)>,
}

pub const CODE_THRESHOLDS: [usize; 3] = [100, 150, 200];

pub fn summary_thresholds(task: Task) -> [usize; 3] {
    match task {
        Task::CommentGeneration => [20, 30, 50],
        Task::MethodNaming => [2, 3, 6],
    }
}

fn mean_and_fractions(lens: &[usize], thresholds: &[usize]) -> (f64, Vec<(usize, f64)>) {
    if lens.is_empty() {
        return (0.0, thresholds.iter().map(|&t| (t, 1.0)).collect());
    }
    let n = lens.len() as f64;
    let mean = lens.iter().sum::<usize>() as f64 / n;
    let fractions = thresholds
        .iter()
        .map(|&t| (t, lens.iter().filter(|&&l| l <= t).count() as f64 / n))
        .collect();
    (mean, fractions)
}

/// Dataset statistics for a single-task corpus. An empty corpus yields zero
/// averages and fractions of 1.
pub fn compute_stats(corpus: &Corpus) -> Result<CorpusStats, IngestError> {
    let task = corpus
        .samples()
        .first()
        .map_or(Task::CommentGeneration, |s| s.task);
    if corpus.samples().iter().any(|s| s.task != task) {
        return Err(IngestError::MixedTasks);
    }
    let code: Vec<usize> = corpus.samples().iter().map(|s| s.code_subtokens.len()).collect();
    let summary: Vec<usize> = corpus
        .samples()
        .iter()
        .map(|s| s.summary_subtokens.len())
        .collect();
    let (avg_code, code_fr) = mean_and_fractions(&code, &CODE_THRESHOLDS);
    let (avg_sum, sum_fr) = mean_and_fractions(&summary, &summary_thresholds(task));
    Ok(CorpusStats {
        task,
        num_samples: corpus.len(),
        avg_code_subtokens: avg_code,
        code_subtokens_at_most: code_fr,
        avg_summary_subtokens: avg_sum,
        summary_subtokens_at_most: sum_fr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2019, 6, 1).unwrap()
    }

    fn cg(id: &str, code: &str, summary: &str) -> Sample {
        Sample::new(id, "p", day(), code, summary, None, Task::CommentGeneration)
    }

    fn clean_code(i: usize) -> String {
        format!("int f{i}() {{ return {i}; }}")
    }

    #[test]
    fn too_long_code_removed_at_10001() {
        let pad = "x".repeat(10_000 - "void f() { ;}".len());
        let ok = format!("void f() {{ ;{pad}}}");
        let long = format!("void f() {{ ;{pad}x}}");
        assert_eq!(ok.chars().count(), 10_000);
        assert_eq!(long.chars().count(), 10_001);
        let cfg = FilterConfig::default();
        assert_eq!(filter_reason(&cg("a", &ok, "Fine."), &cfg), None);
        assert_eq!(
            filter_reason(&cg("b", &long, "Fine."), &cfg),
            Some(FilterReason::CodeTooLong)
        );
    }

    #[test]
    fn non_ascii_summary_removed() {
        let s = cg("a", &clean_code(1), "Café handler");
        assert_eq!(
            filter_reason(&s, &FilterConfig::default()),
            Some(FilterReason::NonEnglishComment)
        );
    }

    #[test]
    fn first_matching_reason_wins() {
        let s = cg("a", "void é();", "Ünïcode");
        assert_eq!(
            filter_reason(&s, &FilterConfig::default()),
            Some(FilterReason::NonEnglishCode)
        );
    }

    #[test]
    fn empty_body_and_comment() {
        let cfg = FilterConfig::default();
        assert_eq!(
            filter_reason(&cg("a", "abstract void f();", "Does f."), &cfg),
            Some(FilterReason::EmptyBody)
        );
        assert_eq!(
            filter_reason(&cg("a", "void f() { // nop\n }", "Does f."), &cfg),
            Some(FilterReason::EmptyBody)
        );
        assert_eq!(
            filter_reason(&cg("a", &clean_code(0), "{@inheritDoc}"), &cfg),
            Some(FilterReason::EmptyComment)
        );
    }

    #[test]
    fn clean_corpus_untouched() {
        let samples = (0..5).map(|i| cg(&i.to_string(), &clean_code(i), "Returns it.")).collect();
        let corpus = Corpus::new(samples).unwrap();
        let (out, report) = filter_corpus(&corpus, &FilterConfig::default()).unwrap();
        assert_eq!(out.len(), 5);
        assert_eq!(report.retained, 5);
        assert_eq!(report.removed(), 0);
    }

    #[test]
    fn masking_examples() {
        let s = Sample::new(
            "a",
            "p",
            day(),
            "String getUserName(int d) { return d > 0 ? getUserName(d - 1) : getUserNameFast(); }",
            "Gets it.",
            Some("getUserName".into()),
            Task::CommentGeneration,
        );
        let m = mask_method_name(&s).unwrap();
        assert_eq!(
            m.code,
            "String METHODNAMEMASK(int d) { return d > 0 ? METHODNAMEMASK(d - 1) : getUserNameFast(); }"
        );
        assert_eq!(m.summary_subtokens, ["get", "user", "name"]);
        assert_eq!(m.name.as_deref(), Some("getUserName"));
        assert_eq!(m.task, Task::MethodNaming);
        assert!(m.code_subtokens.contains(&"methodnamemask".to_string()));
    }

    #[test]
    fn masking_requires_name() {
        assert!(matches!(
            mask_method_name(&cg("a", "void f() { g(); }", "x")),
            Err(IngestError::MissingName(_))
        ));
    }

    fn with_code_len(id: &str, n: usize) -> Sample {
        let code = vec!["x"; n].join(" ");
        cg(id, &code, "Summary text.")
    }

    #[test]
    fn stats_examples() {
        let one = Corpus::new(vec![with_code_len("a", 50)]).unwrap();
        let st = compute_stats(&one).unwrap();
        assert_eq!(st.avg_code_subtokens, 50.0);
        assert_eq!(st.code_subtokens_at_most[0], (100, 1.0));

        let two = Corpus::new(vec![with_code_len("a", 100), with_code_len("b", 200)]).unwrap();
        let st = compute_stats(&two).unwrap();
        assert_eq!(st.avg_code_subtokens, 150.0);
        assert_eq!(st.code_subtokens_at_most[1], (150, 0.5));

        let st = compute_stats(&Corpus::default()).unwrap();
        assert_eq!(st.num_samples, 0);
        assert_eq!(st.avg_code_subtokens, 0.0);
        assert!(st.code_subtokens_at_most.iter().all(|&(_, f)| f == 1.0));
        assert!(st.summary_subtokens_at_most.iter().all(|&(_, f)| f == 1.0));
    }
}
