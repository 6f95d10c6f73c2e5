//! Perspective-annotated CQA threads: data model, canonical JSONL,
//! statistics, splits, annotator agreement and a synthetic generator.

mod agreement;
mod jsonl;
mod label;
mod puma;
mod split;
mod stats;
mod synth;

pub use agreement::{corpus_agreement, span_agreement, summary_agreement, AgreementReport, CorpusAgreement, SpanAgreement, SummaryAgreement};
pub use jsonl::{parse_corpus, read_corpus_file, write_corpus, write_corpus_file, Diagnostic, ParseOutcome, Severity};
pub use label::PerspectiveLabel;
pub use puma::{import_puma, import_puma_reader};
pub use split::{split_dataset, SplitAssignment, SplitName};
pub use stats::{compute_stats, CorpusStats, LabelCounts, PerspectiveCounts, SplitStats};
pub use synth::{synthesize_corpus, SynthConfig};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const MAX_ANSWERS: usize = 10;

/// A labelled character range inside one answer. Offsets are Unicode code
/// points, half-open.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanAnnotation {
    pub answer_idx: usize,
    pub start: usize,
    pub end: usize,
    pub label: PerspectiveLabel,
    pub text: String,
}

/// One question with its answers, span annotations and gold perspective
/// summaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thread {
    pub id: String,
    pub question: String,
    pub category: String,
    pub answers: Vec<String>,
    pub spans: Vec<SpanAnnotation>,
    pub summaries: BTreeMap<PerspectiveLabel, String>,
}

impl Thread {
    pub fn spans_for(&self, label: PerspectiveLabel) -> impl Iterator<Item = &SpanAnnotation> {
        self.spans.iter().filter(move |s| s.label == label)
    }
}

/// Returns the code-point slice `[start, end)` of `text`, or `None` when out
/// of range.
pub fn slice_code_points(text: &str, start: usize, end: usize) -> Option<String> {
    if start > end {
        return None;
    }
    let n = text.chars().count();
    if end > n {
        return None;
    }
    Some(text.chars().skip(start).take(end - start).collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub threads: Vec<Thread>,
}

impl Dataset {
    pub fn new(threads: Vec<Thread>) -> Self {
        Dataset { threads }
    }

    pub fn len(&self) -> usize {
        self.threads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.threads.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Thread> {
        self.threads.iter().find(|t| t.id == id)
    }

    /// Threads assigned to `split`, in dataset order.
    pub fn subset(&self, assignment: &SplitAssignment, split: SplitName) -> Vec<&Thread> {
        self.threads
            .iter()
            .filter(|t| assignment.split_of(&t.id) == Some(split))
            .collect()
    }
}
