use chrono::NaiveDate;
use codesum_eval::corpus::{load_corpus, save_corpus, serialize_corpus, Corpus, Sample, Task};
use proptest::prelude::*;

fn sample() -> impl Strategy<Value = (String, String, u32, String, String, Option<String>)> {
    (
        "[a-z]{1,6}",
        "[a-z]{1,4}",
        0u32..3000,
        "[ -~\n\t]{0,40}",
        "[ -~é]{0,30}",
        prop::option::of("[a-zA-Z_][a-zA-Z0-9_]{0,10}"),
    )
}

proptest! {
    #[test]
    fn save_load_round_trip(raw in prop::collection::vec(sample(), 0..12)) {
        let base = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
        let samples: Vec<Sample> = raw
            .into_iter()
            .enumerate()
            .map(|(i, (id, project, day, code, summary, name))| {
                let task = if name.is_some() { Task::MethodNaming } else { Task::CommentGeneration };
                Sample::new(
                    format!("{id}{i}"),
                    project,
                    base + chrono::Days::new(day as u64),
                    code,
                    summary,
                    name,
                    task,
                )
            })
            .collect();
        let corpus = Corpus::new(samples).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        save_corpus(&corpus, &path).unwrap();
        let back = load_corpus(&path).unwrap();
        prop_assert_eq!(&back, &corpus);
        prop_assert_eq!(serialize_corpus(&back), serialize_corpus(&corpus));
        prop_assert_eq!(back.digest(), corpus.digest());
    }
}

#[test]
fn reports_line_of_bad_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    std::fs::write(
        &path,
        concat!(
            r#"{"id":"a","project":"p","timestamp":"2019-01-01","code":"f() {x;}","summary":"S.","task":"comment_generation"}"#,
            "\n",
            r#"{"id":"b","project":"p","timestamp":"2019-13-01","code":"g() {x;}","summary":"S.","task":"comment_generation"}"#,
            "\n"
        ),
    )
    .unwrap();
    let err = load_corpus(&path).unwrap_err().to_string();
    assert!(err.contains(":2"), "{err}");
}
