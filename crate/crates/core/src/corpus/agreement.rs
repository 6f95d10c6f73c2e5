use super::{Dataset, PerspectiveLabel, SpanAnnotation, Thread};
use crate::metrics::{embed_sim_score, rouge_l, rouge_n, tokenize_eval, tokenize_with_offsets, TokenEmbedder};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Minimum token overlap, relative to the longer span, for two equally
/// labelled spans to count as the same annotation.
pub const SPAN_MATCH_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanAgreement {
    pub f1: f64,
    pub jaccard: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryAgreement {
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub embed_sim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgreementReport {
    pub span_f1: f64,
    pub span_jaccard: f64,
    pub summary_rouge1: f64,
    pub summary_rouge2: f64,
    pub summary_rouge_l: f64,
    pub summary_embed_sim: f64,
}

type TokenKey = (usize, usize);

fn span_tokens(thread: &Thread, span: &SpanAnnotation) -> BTreeSet<TokenKey> {
    let Some(answer) = thread.answers.get(span.answer_idx) else {
        return BTreeSet::new();
    };
    tokenize_with_offsets(answer)
        .iter()
        .enumerate()
        .filter(|(_, t)| t.start < span.end && t.end > span.start)
        .map(|(k, _)| (span.answer_idx, k))
        .collect()
}

/// Span-level agreement between two annotations of the same thread.
///
/// F1: a span matches when the other side has a span with the same label
/// whose token overlap is at least [`SPAN_MATCH_OVERLAP`] of the longer of the
/// two. Precision counts matched spans of `a`, recall matched spans of `b`.
/// Jaccard: per perspective, over the union of labelled tokens, averaged over
/// perspectives present on either side. Two empty annotations agree fully.
pub fn span_agreement(a: &Thread, b: &Thread) -> Result<SpanAgreement> {
    if a.id != b.id {
        return Err(Error::InvalidArgument(format!(
            "annotations reference different threads `{}` and `{}`",
            a.id, b.id
        )));
    }
    if a.answers != b.answers {
        return Err(Error::InvalidArgument(format!(
            "annotations of `{}` are over different answer texts",
            a.id
        )));
    }
    if a.spans.is_empty() && b.spans.is_empty() {
        return Ok(SpanAgreement { f1: 1.0, jaccard: 1.0 });
    }
    let ta: Vec<_> = a.spans.iter().map(|s| (s.label, span_tokens(a, s))).collect();
    let tb: Vec<_> = b.spans.iter().map(|s| (s.label, span_tokens(b, s))).collect();

    let matches = |x: &(PerspectiveLabel, BTreeSet<TokenKey>), y: &(PerspectiveLabel, BTreeSet<TokenKey>)| {
        if x.0 != y.0 {
            return false;
        }
        let longer = x.1.len().max(y.1.len());
        if longer == 0 {
            return false;
        }
        let inter = x.1.intersection(&y.1).count();
        inter as f64 / longer as f64 >= SPAN_MATCH_OVERLAP
    };
    let matched_a = ta.iter().filter(|x| tb.iter().any(|y| matches(x, y))).count();
    let matched_b = tb.iter().filter(|y| ta.iter().any(|x| matches(x, y))).count();
    let precision = if ta.is_empty() { 0.0 } else { matched_a as f64 / ta.len() as f64 };
    let recall = if tb.is_empty() { 0.0 } else { matched_b as f64 / tb.len() as f64 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };

    let mut per_label: BTreeMap<PerspectiveLabel, (BTreeSet<TokenKey>, BTreeSet<TokenKey>)> = BTreeMap::new();
    for (l, toks) in &ta {
        per_label.entry(*l).or_default().0.extend(toks);
    }
    for (l, toks) in &tb {
        per_label.entry(*l).or_default().1.extend(toks);
    }
    let jaccards: Vec<f64> = per_label
        .values()
        .map(|(x, y)| {
            let union = x.union(y).count();
            if union == 0 {
                0.0
            } else {
                x.intersection(y).count() as f64 / union as f64
            }
        })
        .collect();
    let jaccard = jaccards.iter().sum::<f64>() / jaccards.len() as f64;
    Ok(SpanAgreement { f1, jaccard })
}

/// ROUGE F1 and embedding similarity between two summary maps. Labels on
/// only one side score 0; the mean runs over the union of labels.
pub fn summary_agreement(
    a: &BTreeMap<PerspectiveLabel, String>,
    b: &BTreeMap<PerspectiveLabel, String>,
    embedder: &dyn TokenEmbedder,
) -> SummaryAgreement {
    let labels: BTreeSet<_> = a.keys().chain(b.keys()).copied().collect();
    if labels.is_empty() {
        return SummaryAgreement {
            rouge1: 1.0,
            rouge2: 1.0,
            rouge_l: 1.0,
            embed_sim: 1.0,
        };
    }
    let mut acc = SummaryAgreement::default();
    for l in &labels {
        if let (Some(x), Some(y)) = (a.get(l), b.get(l)) {
            let (x, y) = (tokenize_eval(x), tokenize_eval(y));
            acc.rouge1 += rouge_n(&x, &y, 1).f1;
            acc.rouge2 += rouge_n(&x, &y, 2).f1;
            acc.rouge_l += rouge_l(&x, &y).f1;
            acc.embed_sim += embed_sim_score(&x, &y, embedder);
        }
    }
    let n = labels.len() as f64;
    SummaryAgreement {
        rouge1: acc.rouge1 / n,
        rouge2: acc.rouge2 / n,
        rouge_l: acc.rouge_l / n,
        embed_sim: acc.embed_sim / n,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusAgreement {
    pub matched_threads: usize,
    pub unmatched_ids: Vec<String>,
    pub report: AgreementReport,
}

/// Averages thread-level agreement over threads present in both datasets.
pub fn corpus_agreement(a: &Dataset, b: &Dataset, embedder: &dyn TokenEmbedder) -> Result<CorpusAgreement> {
    let mut sum = AgreementReport::default();
    let mut matched = 0usize;
    let mut unmatched = Vec::new();
    for ta in &a.threads {
        let Some(tb) = b.get(&ta.id) else {
            unmatched.push(ta.id.clone());
            continue;
        };
        let s = span_agreement(ta, tb)?;
        let m = summary_agreement(&ta.summaries, &tb.summaries, embedder);
        sum.span_f1 += s.f1;
        sum.span_jaccard += s.jaccard;
        sum.summary_rouge1 += m.rouge1;
        sum.summary_rouge2 += m.rouge2;
        sum.summary_rouge_l += m.rouge_l;
        sum.summary_embed_sim += m.embed_sim;
        matched += 1;
    }
    for tb in &b.threads {
        if a.get(&tb.id).is_none() {
            unmatched.push(tb.id.clone());
        }
    }
    let n = matched.max(1) as f64;
    Ok(CorpusAgreement {
        matched_threads: matched,
        unmatched_ids: unmatched,
        report: AgreementReport {
            span_f1: sum.span_f1 / n,
            span_jaccard: sum.span_jaccard / n,
            summary_rouge1: sum.summary_rouge1 / n,
            summary_rouge2: sum.summary_rouge2 / n,
            summary_rouge_l: sum.summary_rouge_l / n,
            summary_embed_sim: sum.summary_embed_sim / n,
        },
    })
}
