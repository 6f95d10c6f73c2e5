use crate::{Error, Result};
use sha2::{Digest, Sha256};

/// Maps a token to a vector. Implementations must be deterministic.
pub trait TokenEmbedder {
    fn dim(&self) -> usize;
    fn embed(&self, token: &str) -> Vec<f64>;
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!(
            "cosine of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(cosine_unchecked(u, v))
}

pub(crate) fn cosine_unchecked(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

/// Greedy-matching embedding similarity F1.
///
/// Each candidate token takes its best cosine over reference tokens
/// (precision side) and vice versa (recall side). If any pairwise cosine is
/// negative, every cosine is first mapped through `(x + 1) / 2` so the result
/// stays in `[0, 1]`.
pub fn embed_sim_score<S: AsRef<str>>(cand: &[S], reference: &[S], embedder: &dyn TokenEmbedder) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let ce: Vec<Vec<f64>> = cand.iter().map(|t| embedder.embed(t.as_ref())).collect();
    let re: Vec<Vec<f64>> = reference.iter().map(|t| embedder.embed(t.as_ref())).collect();
    let mut table: Vec<Vec<f64>> = ce
        .iter()
        .map(|c| re.iter().map(|r| cosine_unchecked(c, r)).collect())
        .collect();
    if table.iter().flatten().any(|&x| x < 0.0) {
        for x in table.iter_mut().flatten() {
            *x = (*x + 1.0) / 2.0;
        }
    }
    let precision = table
        .iter()
        .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / cand.len() as f64;
    let recall = (0..reference.len())
        .map(|j| table.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / reference.len() as f64;
    super::rouge::f1(precision, recall).clamp(0.0, 1.0)
}

/// Deterministic pseudo-random unit vectors keyed by a hash of the token.
/// Distinct tokens are nearly orthogonal in high dimension; useful when no
/// trained embedding table is at hand.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        HashEmbedder { dim: dim.max(1) }
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        HashEmbedder::new(256)
    }
}

impl TokenEmbedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, token: &str) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim);
        let mut counter = 0u32;
        while out.len() < self.dim {
            let mut h = Sha256::new();
            h.update(token.as_bytes());
            h.update(counter.to_le_bytes());
            for chunk in h.finalize().chunks(4) {
                if out.len() == self.dim {
                    break;
                }
                let x = u32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
                out.push(x as f64 / u32::MAX as f64 * 2.0 - 1.0);
            }
            counter += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    struct Fixed(HashMap<&'static str, Vec<f64>>);

    impl TokenEmbedder for Fixed {
        fn dim(&self) -> usize {
            2
        }
        fn embed(&self, token: &str) -> Vec<f64> {
            self.0.get(token).cloned().unwrap_or(vec![0.0, 0.0])
        }
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine(&[3.0, 4.0], &[3.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn identical_text_scores_one() {
        let e = HashEmbedder::new(64);
        let a = ["the", "cat", "sat"];
        assert!((embed_sim_score(&a, &a, &e) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_one_hot_is_zero() {
        let e = Fixed(HashMap::from([("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])]));
        assert_eq!(embed_sim_score(&["a"], &["b"], &e), 0.0);
    }

    #[test]
    fn two_token_table() {
        let e = Fixed(HashMap::from([
            ("x", vec![1.0, 0.0]),
            ("y", vec![1.0, 1.0]),
            ("z", vec![0.0, 1.0]),
        ]));
        // brute-force pairwise table: cand [x, y], ref [z]
        // cos(x,z) = 0, cos(y,z) = 1/sqrt2
        let s = 0.5f64.sqrt();
        let p = (0.0 + s) / 2.0;
        let r = s;
        let expected = 2.0 * p * r / (p + r);
        assert!((embed_sim_score(&["x", "y"], &["z"], &e) - expected).abs() < 1e-12);
    }

    #[test]
    fn negative_cosines_are_rescaled() {
        let e = Fixed(HashMap::from([("a", vec![1.0, 0.0]), ("b", vec![-1.0, 0.0])]));
        assert_eq!(embed_sim_score(&["a"], &["b"], &e), 0.0);
        assert!((embed_sim_score(&["a", "b"], &["a"], &e) - 2.0 * 0.5 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_token_contributes_zero() {
        let e = Fixed(HashMap::from([("a", vec![1.0, 0.0])]));
        assert_eq!(embed_sim_score(&["unk"], &["a"], &e), 0.0);
    }
}
