use std::path::Path;
use std::process::Command;

use chrono::NaiveDate;
use codesum_eval::ingest::{filter_corpus, filter_reason, FilterConfig, FilterReason};
use codesum_eval::miner::{mine, MinerConfig, Repo};

fn git(dir: &Path, args: &[&str], date: &str) {
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["-c", "user.name=Fixture", "-c", "user.email=fixture@example.com", "-c", "commit.gpgsign=false"])
        .args(args)
        .env("GIT_AUTHOR_DATE", date)
        .env("GIT_COMMITTER_DATE", date)
        .output()
        .expect("git runs");
    assert!(out.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn d(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

const FIRST: &str = r#"package demo;

public class Calc {
    /** Adds two numbers. Returns their sum. */
    public int add(int a, int b) {
        return a + b;
    }

    /** Gibt den größeren Wert zurück. */
    public int max(int a, int b) {
        return a > b ? a : b;
    }

    /** Builds a very long table. */
    public String table() {
        return "LONG";
    }
}
"#;

const SECOND_EXTRA: &str = r#"
class Extra {
    /** Subtracts b from a. */
    int sub(int a, int b) {
        return a - b;
    }
}
"#;

/// Two commits straddling the 2020 cutoff; `add` is present in both snapshots.
fn fixture(dir: &Path) {
    git(dir, &["init", "-q", "-b", "main"], "2019-01-01T00:00:00Z");
    let long_body = format!("\"{}\"", "x".repeat(10_050));
    std::fs::write(dir.join("Calc.java"), FIRST.replace("\"LONG\"", &long_body)).unwrap();
    git(dir, &["add", "."], "2019-06-01T12:00:00Z");
    git(dir, &["commit", "-q", "-m", "first"], "2019-06-01T12:00:00Z");
    std::fs::write(dir.join("Extra.java"), SECOND_EXTRA).unwrap();
    git(dir, &["add", "."], "2020-06-01T12:00:00Z");
    git(dir, &["commit", "-q", "-m", "second"], "2020-06-01T12:00:00Z");
}

#[test]
fn mines_each_method_once_with_earliest_stamp() {
    let tmp = tempfile::tempdir().unwrap();
    let repo = tmp.path().join("demo");
    std::fs::create_dir(&repo).unwrap();
    fixture(&repo);

    let cfg = MinerConfig::new(vec![repo.clone()], vec![d("2020-01-01"), d("2021-01-01")]);
    let (corpus, report) = mine(&cfg).unwrap();
    assert_eq!(report.snapshots.len(), 2);
    assert!(report.snapshots.iter().all(|s| s.commit.is_some()));
    assert_eq!(report.samples_before_dedup, 3 + 4);

    let by_summary = |text: &str| {
        let hits: Vec<_> = corpus.samples().iter().filter(|s| s.summary.contains(text)).collect();
        assert_eq!(hits.len(), 1, "{text}");
        hits[0].clone()
    };
    let add = by_summary("Adds two numbers");
    assert_eq!(add.summary, "Adds two numbers.");
    assert_eq!(add.timestamp, d("2019-12-31"));
    assert_eq!(add.project, "demo");
    let sub = by_summary("Subtracts");
    assert_eq!(sub.timestamp, d("2020-12-31"));
    assert_eq!(corpus.len(), 4);
    corpus.validate().unwrap();

    // working tree is back on the branch tip
    let head = Repo::open(&repo).unwrap();
    assert!(repo.join("Extra.java").exists());
    assert_eq!(head.history().unwrap().len(), 2);

    let fcfg = FilterConfig::default();
    assert_eq!(filter_reason(&by_summary("Builds"), &fcfg), Some(FilterReason::CodeTooLong));
    assert_eq!(filter_reason(&by_summary("Gibt"), &fcfg), Some(FilterReason::NonEnglishComment));
    let (kept, freport) = filter_corpus(&corpus, &fcfg).unwrap();
    assert_eq!(freport.removed(), 2);
    let names: Vec<_> = kept.samples().iter().map(|s| s.summary.as_str()).collect();
    assert_eq!(names, ["Adds two numbers.", "Subtracts b from a."]);
}

#[test]
fn cutoff_before_history_is_an_empty_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path());
    let repo = Repo::open(tmp.path()).unwrap();
    assert_eq!(repo.last_commit_before(d("2019-01-01")).unwrap(), None);
    let c = repo.last_commit_before(d("2020-06-01")).unwrap().unwrap();
    // 2019-06-01T12:00:00Z
    assert_eq!(c.time, 1_559_390_400);
    // the second commit is at noon on 2020-06-01, so a cutoff that day excludes it
    let c2 = repo.last_commit_before(d("2020-06-02")).unwrap().unwrap();
    assert!(c2.time > c.time);
}
