#![allow(dead_code)]

use std::collections::BTreeMap;

use plasma::corpus::{Dataset, PerspectiveLabel, SpanAnnotation, SplitAssignment, SplitName, Thread};
use plasma::harness::{ModelSpec, OptimSpec, RunConfig};

use PerspectiveLabel::*;

/// (label, spans, summaries)
pub type LabelRow = (PerspectiveLabel, usize, usize);

/// Published corpus counts: per split, thread count and label rows.
pub const PUBLISHED_SPLITS: [(SplitName, usize, [LabelRow; 5]); 3] = [
    (
        SplitName::Train,
        2533,
        [(Information, 4823, 1961), (Cause, 646, 342), (Suggestion, 4128, 1547), (Question, 325, 249), (Experience, 1439, 845)],
    ),
    (
        SplitName::Val,
        317,
        [(Information, 643, 246), (Cause, 108, 49), (Suggestion, 549, 208), (Question, 42, 32), (Experience, 170, 108)],
    ),
    (
        SplitName::Test,
        317,
        [(Information, 631, 242), (Cause, 81, 45), (Suggestion, 499, 188), (Question, 44, 31), (Experience, 181, 100)],
    ),
];

pub const PUBLISHED_TOTAL: [LabelRow; 5] =
    [(Information, 6097, 2449), (Cause, 835, 436), (Suggestion, 5176, 1943), (Question, 411, 312), (Experience, 1790, 1053)];

/// A corpus with exactly the published counts. Within a split, label `l`'s
/// summaries occupy a cyclic run of threads starting where the previous
/// label's run ended, so every thread gets at least one summary; spans are
/// spread over the threads that carry that label's summary.
pub fn published_corpus() -> (Dataset, SplitAssignment) {
    let mut threads = Vec::new();
    let mut splits = SplitAssignment::default();
    for (split, n, labels) in PUBLISHED_SPLITS {
        let mut per_thread: Vec<Vec<(PerspectiveLabel, usize)>> = vec![Vec::new(); n];
        let mut offset = 0;
        for (label, spans, summaries) in labels {
            for j in 0..summaries {
                let k = spans / summaries + usize::from(j < spans % summaries);
                per_thread[(offset + j) % n].push((label, k));
            }
            offset = (offset + summaries) % n;
        }
        for (i, plan) in per_thread.into_iter().enumerate() {
            let id = format!("{split}-{i:04}");
            let mut answer = String::from("answer");
            let mut span_list = Vec::new();
            let mut summaries = BTreeMap::new();
            for (label, k) in plan {
                let word = label.as_str().to_lowercase();
                for _ in 0..k {
                    answer.push(' ');
                    let start = answer.len();
                    answer.push_str(&word);
                    span_list.push(SpanAnnotation { answer_idx: 0, start, end: answer.len(), label, text: word.clone() });
                }
                summaries.insert(label, format!("{word} summary"));
            }
            splits.insert(id.clone(), split).unwrap();
            threads.push(Thread {
                id,
                question: format!("question {i}"),
                category: "general".into(),
                answers: vec![answer],
                spans: span_list,
                summaries,
            });
        }
    }
    (Dataset::new(threads), splits)
}

/// Small model and short schedules for plumbing tests.
pub fn tiny_config() -> RunConfig {
    RunConfig {
        synthetic_threads: 40,
        model: ModelSpec { d_model: 16, n_heads: 2, d_ff: 32, enc_layers: 1, dec_layers: 1, max_len: 256 },
        pretrain: OptimSpec { lr: 3e-3, epochs: 1, batch_size: 4, max_steps: Some(6), clip_norm: None },
        prefix_train: OptimSpec { lr: 1e-2, epochs: 1, batch_size: 4, max_steps: Some(3), clip_norm: Some(1.0) },
        prefix_len: 4,
        max_summary_len: 8,
        eval_limit: Some(3),
        ..Default::default()
    }
}
