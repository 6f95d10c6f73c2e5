use super::rouge::ngram_counts;
use std::collections::HashMap;

/// Sentence-level BLEU.
///
/// Uses modified n-gram precisions for `n <= min(max_n, |cand|)`. When the
/// clipped match count of an order `n >= 2` is zero it is replaced by
/// `1 / (total + 1)` (add-one on both counts). Brevity penalty uses the
/// reference length closest to the candidate length, shorter on ties.
pub fn bleu<S: AsRef<str>>(cand: &[S], refs: &[&[S]], max_n: usize) -> f64 {
    if cand.is_empty() || refs.is_empty() || max_n == 0 {
        return 0.0;
    }
    let top = max_n.min(cand.len());
    let mut log_sum = 0.0;
    for n in 1..=top {
        let c = ngram_counts(cand, n);
        let mut max_ref: HashMap<Vec<&str>, usize> = HashMap::new();
        for r in refs {
            for (g, k) in ngram_counts(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(k);
            }
        }
        let matched: usize = c
            .iter()
            .map(|(g, &k)| k.min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        let total = cand.len() + 1 - n;
        let p = if matched == 0 {
            if n == 1 {
                return 0.0;
            }
            1.0 / (total as f64 + 1.0)
        } else {
            matched as f64 / total as f64
        };
        log_sum += p.ln();
    }
    let c = cand.len() as f64;
    let r = refs
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| ((len as i64 - cand.len() as i64).abs(), len))
        .unwrap_or(0) as f64;
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    bp * (log_sum / top as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize_eval;

    fn toks(s: &str) -> Vec<String> {
        tokenize_eval(s).into_inner()
    }

    #[test]
    fn exact_match_is_one() {
        let a = toks("the cat sat on the mat today");
        assert_eq!(bleu(&a, &[&a[..]], 4), 1.0);
        let short = toks("hi");
        assert_eq!(bleu(&short, &[&short[..]], 4), 1.0);
    }

    #[test]
    fn brevity_penalty_case() {
        let c = toks("the cat");
        let r = toks("the cat sat");
        let b = bleu(&c, &[&r[..]], 4);
        assert!((b - (-0.5f64).exp()).abs() < 1e-12);
        assert!((b - 0.6065).abs() < 1e-4);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(bleu(&toks("a b c"), &[&toks("d e f")[..]], 4), 0.0);
    }

    #[test]
    fn smoothing_for_missing_bigrams() {
        // p1 = 2/2, no bigram match -> p2 = 1/2
        let b = bleu(&toks("cat the"), &[&toks("the cat")[..]], 4);
        assert!((b - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn closest_reference_length() {
        let c = toks("a b c");
        let r1 = toks("a b c d e f");
        let r2 = toks("a b c");
        assert_eq!(bleu(&c, &[&r1[..], &r2[..]], 4), 1.0);
    }
}
