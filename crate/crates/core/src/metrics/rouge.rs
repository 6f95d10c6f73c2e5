use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl RougeScore {
    pub fn from_counts(overlap: f64, cand_total: f64, ref_total: f64) -> Self {
        if cand_total <= 0.0 || ref_total <= 0.0 {
            return RougeScore::default();
        }
        let recall = overlap / ref_total;
        let precision = overlap / cand_total;
        RougeScore {
            recall,
            precision,
            f1: f1(precision, recall),
        }
    }
}

pub(crate) fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub(crate) fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts
            .entry(w.iter().map(AsRef::as_ref).collect::<Vec<_>>())
            .or_insert(0) += 1;
    }
    counts
}

fn ngram_total(len: usize, n: usize) -> usize {
    if n == 0 || len < n {
        0
    } else {
        len - n + 1
    }
}

/// Clipped n-gram overlap between candidate and reference.
pub fn rouge_n<S: AsRef<str>>(cand: &[S], reference: &[S], n: usize) -> RougeScore {
    let c = ngram_counts(cand, n);
    let r = ngram_counts(reference, n);
    let overlap: usize = c
        .iter()
        .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    let cand_total = ngram_total(cand.len(), n);
    let ref_total = ngram_total(reference.len(), n);
    RougeScore::from_counts(overlap as f64, cand_total as f64, ref_total as f64)
}

/// Length of the longest common subsequence.
pub fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l<S: AsRef<str>>(cand: &[S], reference: &[S]) -> RougeScore {
    let l = lcs_len(cand, reference);
    RougeScore::from_counts(l as f64, cand.len() as f64, reference.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize_eval;

    fn toks(s: &str) -> Vec<String> {
        tokenize_eval(s).into_inner()
    }

    #[test]
    fn identical() {
        let a = toks("the cat sat on the mat");
        for n in 1..=2 {
            let s = rouge_n(&a, &a, n);
            assert_eq!((s.recall, s.precision, s.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(rouge_l(&a, &a).f1, 1.0);
    }

    #[test]
    fn cat_sat_vs_cat_ran() {
        let s = rouge_n(&toks("the cat sat"), &toks("the cat ran"), 1);
        assert!((s.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_is_zero() {
        let s = rouge_n(&toks("a b c"), &toks("d e f"), 1);
        assert_eq!(s, RougeScore::default());
        assert_eq!(rouge_l(&toks("a b"), &toks("c d")), RougeScore::default());
    }

    #[test]
    fn clipping() {
        let s = rouge_n(&toks("the the the"), &toks("the cat"), 1);
        assert!((s.precision - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.recall - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lcs_example() {
        let s = rouge_l(&toks("a b c d"), &toks("a c b d"));
        assert_eq!(lcs_len(&toks("a b c d"), &toks("a c b d")), 3);
        assert!((s.recall - 0.75).abs() < 1e-15);
    }

    #[test]
    fn empty_sides() {
        let e: Vec<String> = vec![];
        assert_eq!(rouge_l(&e, &toks("a")), RougeScore::default());
        assert_eq!(rouge_n(&toks("a"), &e, 1), RougeScore::default());
        // too short for bigrams
        assert_eq!(rouge_n(&toks("a"), &toks("a b"), 2), RougeScore::default());
    }
}
