/// METEOR without the synonym and paraphrase stages.
///
/// Alignment is greedy left to right: exact matches first, then matches on
/// Porter stems among the still-unaligned tokens. `alpha = 0.9`,
/// `gamma = 0.5`, `beta = 3`.
pub fn meteor_lite<S: AsRef<str>>(cand: &[S], reference: &[S]) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut cand_to_ref: Vec<Option<usize>> = vec![None; cand.len()];
    let mut ref_used = vec![false; reference.len()];
    for (i, c) in cand.iter().enumerate() {
        if let Some(j) = (0..reference.len()).find(|&j| !ref_used[j] && reference[j].as_ref() == c.as_ref()) {
            cand_to_ref[i] = Some(j);
            ref_used[j] = true;
        }
    }
    let cand_stems: Vec<String> = cand.iter().map(|t| porter_stemmer::stem(t.as_ref())).collect();
    let ref_stems: Vec<String> = reference
        .iter()
        .map(|t| porter_stemmer::stem(t.as_ref()))
        .collect();
    for i in 0..cand.len() {
        if cand_to_ref[i].is_some() {
            continue;
        }
        if let Some(j) = (0..reference.len()).find(|&j| !ref_used[j] && ref_stems[j] == cand_stems[i]) {
            cand_to_ref[i] = Some(j);
            ref_used[j] = true;
        }
    }
    let matches = cand_to_ref.iter().filter(|m| m.is_some()).count();
    if matches == 0 {
        return 0.0;
    }
    // a chunk is a maximal run adjacent in both candidate and reference
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for (i, m) in cand_to_ref.iter().enumerate() {
        match *m {
            Some(j) => {
                let continues = matches!(prev, Some((pi, pj)) if pi + 1 == i && pj + 1 == j);
                if !continues {
                    chunks += 1;
                }
                prev = Some((i, j));
            }
            None => prev = None,
        }
    }
    let m = matches as f64;
    let precision = m / cand.len() as f64;
    let recall = m / reference.len() as f64;
    let f_mean = precision * recall / (0.9 * precision + 0.1 * recall);
    let penalty = 0.5 * (chunks as f64 / m).powi(3);
    f_mean * (1.0 - penalty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize_eval;

    fn toks(s: &str) -> Vec<String> {
        tokenize_eval(s).into_inner()
    }

    #[test]
    fn single_token() {
        assert!((meteor_lite(&toks("hello"), &toks("hello")) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ten_tokens_one_chunk() {
        let a = toks("a b c d e f g h i j");
        assert!((meteor_lite(&a, &a) - 0.9995).abs() < 1e-12);
    }

    #[test]
    fn disjoint() {
        assert_eq!(meteor_lite(&toks("a b"), &toks("c d")), 0.0);
    }

    #[test]
    fn stem_match() {
        // "running" ~ "run" via stems, two chunks broken by order? no: same order
        let s = meteor_lite(&toks("cats running"), &toks("cat runs"));
        // 2 matches, 1 chunk, P = R = 1
        assert!((s - (1.0 - 0.5 * 0.125)).abs() < 1e-12);
    }

    #[test]
    fn crossing_alignment_makes_more_chunks() {
        let s = meteor_lite(&toks("b a"), &toks("a b"));
        assert!((s - 0.5).abs() < 1e-12);
    }
}
