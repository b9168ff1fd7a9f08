use std::collections::HashMap;

use codesum_eval::metrics::{bleu4, exact_match, meteor, meteor_alignment, rouge_l, set_match_prf};
use proptest::prelude::*;

fn ngrams(t: &[String], n: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + n <= t.len() {
        out.push(t[i..i + n].to_vec());
        i += 1;
    }
    out
}

fn count(list: &[Vec<String>], g: &[String]) -> usize {
    list.iter().filter(|x| x.as_slice() == g).count()
}

/// Sentence BLEU-4 computed with explicit n-gram lists and log-space averaging.
fn bleu_oracle(pred: &[String], r: &[String]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let pg = ngrams(pred, n);
        let rg = ngrams(r, n);
        let mut seen: Vec<Vec<String>> = Vec::new();
        let mut clipped = 0;
        for g in &pg {
            if seen.contains(g) {
                continue;
            }
            seen.push(g.clone());
            clipped += count(&pg, g).min(count(&rg, g));
        }
        let p = if n == 1 {
            clipped as f64 / pg.len() as f64
        } else {
            (clipped as f64 + 1.0) / (pg.len() as f64 + 1.0)
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
    }
    let (c, rl) = (pred.len() as f64, r.len() as f64);
    let bp = if c < rl { (1.0 - rl / c).exp() } else { 1.0 };
    bp * (log_sum / 4.0).exp()
}

fn lcs_oracle(a: &[String], b: &[String]) -> usize {
    fn go(a: &[String], b: &[String], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

fn rouge_oracle(p: &[String], r: &[String]) -> f64 {
    let l = lcs_oracle(p, r) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let (prec, rec) = (l / p.len() as f64, l / r.len() as f64);
    2.0 * prec * rec / (prec + rec)
}

fn set_match_oracle(p: &[String], g: &[String]) -> (usize, usize, usize) {
    let mut a = p.to_vec();
    let mut b = g.to_vec();
    a.sort();
    b.sort();
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    (common, p.len(), g.len())
}

/// Exhaustive search over every one-to-one alignment.
fn meteor_alignment_oracle(p: &[String], r: &[String]) -> (usize, usize) {
    fn go(p: &[String], r: &[String], i: usize, map: &mut Vec<Option<usize>>, used: &mut Vec<bool>, best: &mut (usize, usize)) {
        if i == p.len() {
            let m = map.iter().flatten().count();
            let mut chunks = 0;
            for k in 0..map.len() {
                if let Some(j) = map[k] {
                    let continues = k > 0 && map[k - 1].is_some_and(|pj| pj + 1 == j);
                    if !continues {
                        chunks += 1;
                    }
                }
            }
            if m > best.0 || (m == best.0 && chunks < best.1) {
                *best = (m, chunks);
            }
            return;
        }
        map.push(None);
        go(p, r, i + 1, map, used, best);
        map.pop();
        for j in 0..r.len() {
            if !used[j] && r[j] == p[i] {
                used[j] = true;
                map.push(Some(j));
                go(p, r, i + 1, map, used, best);
                map.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (0, 0);
    go(p, r, 0, &mut Vec::new(), &mut vec![false; r.len()], &mut best);
    best
}

fn tokens(vocab: usize, len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec((0..vocab).prop_map(|i| format!("w{i}")), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn bleu_matches_oracle(p in tokens(6, 1..=30), r in tokens(6, 1..=30)) {
        prop_assert!((bleu4(&p, &r) - bleu_oracle(&p, &r)).abs() < 1e-9);
    }

    #[test]
    fn rouge_matches_oracle(p in tokens(5, 1..=30), r in tokens(5, 1..=30)) {
        prop_assert!((rouge_l(&p, &r).f1 - rouge_oracle(&p, &r)).abs() < 1e-9);
    }

    #[test]
    fn set_match_matches_oracle(p in tokens(5, 0..=12), g in tokens(5, 1..=12)) {
        let (c, lp, lg) = set_match_oracle(&p, &g);
        let prf = set_match_prf(&p, &g);
        if c == 0 {
            prop_assert_eq!((prf.precision, prf.recall, prf.f1), (0.0, 0.0, 0.0));
        } else {
            prop_assert_eq!(prf.precision, c as f64 / lp as f64);
            prop_assert_eq!(prf.recall, c as f64 / lg as f64);
        }
    }

    #[test]
    fn meteor_alignment_matches_exhaustive(p in tokens(3, 1..=7), r in tokens(3, 1..=7)) {
        prop_assert_eq!(meteor_alignment(&p, &r), meteor_alignment_oracle(&p, &r));
    }

    #[test]
    fn scores_in_unit_interval(p in tokens(4, 0..=20), r in tokens(4, 1..=20)) {
        for v in [bleu4(&p, &r), meteor(&p, &r), rouge_l(&p, &r).f1, exact_match(&p, &r), set_match_prf(&p, &r).f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn identity_is_maximal(r in tokens(8, 1..=20)) {
        prop_assert_eq!(bleu4(&r, &r), 1.0);
        prop_assert_eq!(rouge_l(&r, &r).f1, 1.0);
        prop_assert_eq!(exact_match(&r, &r), 1.0);
        prop_assert_eq!(set_match_prf(&r, &r).f1, 1.0);
        let m = r.len() as f64;
        prop_assert!((meteor(&r, &r) - (1.0 - 0.5 / (m * m * m))).abs() < 1e-12);
    }
}
