//! Deterministic summarization metrics.
//!
//! Everything here operates on [`EvalTokens`] produced by [`tokenize_eval`].
//! ROUGE uses neither stemming nor stopword removal; that choice is echoed in
//! [`MetricMetadata`] so reports are self-describing.

mod bleu;
mod embed;
mod meteor;
mod rouge;
mod tokenize;

pub use bleu::bleu;
pub use embed::{cosine, embed_sim_score, HashEmbedder, TokenEmbedder};
pub use meteor::meteor_lite;
pub use rouge::{lcs_len, rouge_l, rouge_n, RougeScore};
pub use tokenize::{tokenize_eval, tokenize_with_offsets, EvalTokens, OffsetToken};

pub(crate) use embed::cosine_unchecked;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore,
    pub bleu: f64,
    pub meteor: f64,
    pub embed_sim: f64,
}

impl MetricReport {
    pub fn score(cand: &EvalTokens, reference: &EvalTokens, embedder: &dyn TokenEmbedder) -> Self {
        MetricReport {
            rouge1: rouge_n(cand, reference, 1),
            rouge2: rouge_n(cand, reference, 2),
            rouge_l: rouge_l(cand, reference),
            bleu: bleu(cand, &[&reference[..]], 4),
            meteor: meteor_lite(cand, reference),
            embed_sim: embed_sim_score(cand, reference, embedder),
        }
    }

    /// Weighted mean of reports; weights need not be normalized.
    pub fn weighted_mean<'a, I>(items: I) -> Self
    where
        I: IntoIterator<Item = (&'a MetricReport, f64)>,
    {
        let mut acc = [0.0f64; 12];
        let mut total = 0.0;
        for (r, w) in items {
            for (a, v) in acc.iter_mut().zip(r.as_array()) {
                *a += w * v;
            }
            total += w;
        }
        if total <= 0.0 {
            return MetricReport::default();
        }
        for a in acc.iter_mut() {
            *a /= total;
        }
        MetricReport::from_array(acc)
    }

    pub fn mean(items: &[MetricReport]) -> Self {
        Self::weighted_mean(items.iter().map(|r| (r, 1.0)))
    }

    fn as_array(&self) -> [f64; 12] {
        let r = |s: &RougeScore| [s.recall, s.precision, s.f1];
        let [a, b, c] = r(&self.rouge1);
        let [d, e, f] = r(&self.rouge2);
        let [g, h, i] = r(&self.rouge_l);
        [a, b, c, d, e, f, g, h, i, self.bleu, self.meteor, self.embed_sim]
    }

    fn from_array(a: [f64; 12]) -> Self {
        let r = |i: usize| RougeScore {
            recall: a[i],
            precision: a[i + 1],
            f1: a[i + 2],
        };
        MetricReport {
            rouge1: r(0),
            rouge2: r(3),
            rouge_l: r(6),
            bleu: a[9],
            meteor: a[10],
            embed_sim: a[11],
        }
    }
}

/// Configuration echoed into every metric report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMetadata {
    pub tokenizer: String,
    pub rouge_stemming: bool,
    pub rouge_stopwords_removed: bool,
    pub bleu: String,
    pub meteor: String,
    pub embed_sim: String,
}

impl MetricMetadata {
    pub fn describe(embedder: &str) -> Self {
        MetricMetadata {
            tokenizer: "lowercase, punctuation split, dot runs dropped".into(),
            rouge_stemming: false,
            rouge_stopwords_removed: false,
            bleu: "sentence-level, max_n=4, add-one for zero counts at n>=2, averaged".into(),
            meteor: "exact+porter-stem alignment, alpha=0.9 beta=3 gamma=0.5".into(),
            embed_sim: format!("greedy matching F1 over {embedder}"),
        }
    }
}

/// Output of `metrics score`: the corpus mean plus per-pair reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreFile {
    pub metadata: MetricMetadata,
    pub count: usize,
    #[serde(flatten)]
    pub mean: MetricReport,
    pub per_example: Vec<MetricReport>,
}

/// Scores candidate/reference lines pairwise.
pub fn score_lines(cands: &[String], refs: &[String], embedder: &dyn TokenEmbedder, embedder_name: &str) -> crate::Result<ScoreFile> {
    if cands.len() != refs.len() {
        return Err(crate::Error::InvalidArgument(format!(
            "{} candidate lines but {} reference lines",
            cands.len(),
            refs.len()
        )));
    }
    let per_example: Vec<MetricReport> = cands
        .iter()
        .zip(refs)
        .map(|(c, r)| MetricReport::score(&tokenize_eval(c), &tokenize_eval(r), embedder))
        .collect();
    Ok(ScoreFile {
        metadata: MetricMetadata::describe(embedder_name),
        count: per_example.len(),
        mean: MetricReport::mean(&per_example),
        per_example,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_for_identical_text() {
        let t = tokenize_eval("it is suggested to rest and drink water");
        let r = MetricReport::score(&t, &t, &HashEmbedder::default());
        assert_eq!(r.rouge1.f1, 1.0);
        assert_eq!(r.rouge2.f1, 1.0);
        assert_eq!(r.rouge_l.f1, 1.0);
        assert_eq!(r.bleu, 1.0);
        assert!((r.embed_sim - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_mean_matches_hand() {
        let a = MetricReport { bleu: 1.0, ..Default::default() };
        let b = MetricReport::default();
        let m = MetricReport::weighted_mean([(&a, 3.0), (&b, 1.0)]);
        assert!((m.bleu - 0.75).abs() < 1e-15);
    }

    #[test]
    fn report_json_uses_field_names() {
        let v = serde_json::to_value(MetricReport::default()).unwrap();
        for k in ["rouge1", "rouge2", "rougeL", "bleu", "meteor", "embed_sim"] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }
}
