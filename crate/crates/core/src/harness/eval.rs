use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{PerspectiveLabel, SplitName, Thread};
use crate::energy::{anchor_energy, AnchorScore, PerspectiveClassifier};
use crate::metrics::{tokenize_eval, HashEmbedder, MetricReport, TokenEmbedder};
use crate::nnkit::{decode, DecodeMode, ModelParams, PrefixParams, Tensor, Vocab, UNK};
use crate::prompt::{anchor_tokens, build_prompt, Placement, PromptParts, PromptSpec};
use crate::Result;

/// Produces a summary of `thread` from `perspective`.
pub trait Summarizer: Sync {
    fn summarize(&self, thread: &Thread, perspective: PerspectiveLabel) -> Result<String>;
}

/// Frozen base plus optional prefix, decoding from the canonical prompt.
pub struct ModelSummarizer<'a> {
    pub base: &'a ModelParams,
    pub prefix: Option<&'a PrefixParams>,
    pub vocab: &'a Vocab,
    pub parts: PromptParts,
    pub placement: Placement,
    pub mode: DecodeMode,
    pub max_len: usize,
}

impl Summarizer for ModelSummarizer<'_> {
    fn summarize(&self, thread: &Thread, perspective: PerspectiveLabel) -> Result<String> {
        let prompt = build_prompt(&PromptSpec {
            thread,
            perspective,
            placement: self.placement,
            parts: self.parts,
        })?;
        let mut src = self.vocab.encode(&prompt);
        src.truncate(self.base.config.max_len);
        let out = decode(self.base, self.prefix, &src, self.mode, self.max_len)?;
        Ok(self.vocab.decode(&out.ids))
    }
}

/// Returns the gold summary; an oracle for plumbing tests.
pub struct GoldSummarizer;

impl Summarizer for GoldSummarizer {
    fn summarize(&self, thread: &Thread, perspective: PerspectiveLabel) -> Result<String> {
        Ok(thread.summaries.get(&perspective).cloned().unwrap_or_default())
    }
}

/// Rows of an embedding table looked up through a vocabulary; unknown
/// tokens map to the UNK row.
pub struct TableEmbedder<'a> {
    pub vocab: &'a Vocab,
    pub table: &'a Tensor,
}

impl TokenEmbedder for TableEmbedder<'_> {
    fn dim(&self) -> usize {
        self.table.cols()
    }

    fn embed(&self, token: &str) -> Vec<f64> {
        let id = self.vocab.id(token).unwrap_or(UNK);
        self.table.row_slice(id).to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    /// Perspective label or `OVERALL`.
    pub scope: String,
    pub count: usize,
    pub metrics: MetricReport,
    /// Share of outputs the classifier assigns to the requested perspective.
    pub classifier_accuracy: f64,
    /// Share of outputs that begin with the perspective's anchor.
    pub anchor_hit_rate: f64,
    /// Mean anchor energy of the requested perspective.
    pub anchor_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generated {
    pub thread_id: String,
    pub perspective: PerspectiveLabel,
    pub text: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: SplitName,
    /// Threads considered, after any limit.
    pub split_size: usize,
    pub evaluated: usize,
    /// Threads without any gold summary.
    pub skipped: usize,
    pub rows: Vec<EvalRow>,
    pub outputs: Vec<Generated>,
}

impl EvalReport {
    pub fn row(&self, scope: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.scope == scope)
    }

    pub fn overall(&self) -> &EvalRow {
        self.rows.last().expect("OVERALL row")
    }

    pub fn table(&self) -> String {
        render_table(&self.rows)
    }
}

pub fn render_table(rows: &[EvalRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:>5} {:>7} {:>7} {:>7} {:>8} {:>7} {:>7} {:>7} {:>7}",
        "scope", "n", "R1", "R2", "RL", "EmbedSim", "METEOR", "BLEU", "ClfAcc", "Anchor"
    );
    for r in rows {
        let m = &r.metrics;
        let _ = writeln!(
            s,
            "{:<12} {:>5} {:>7.4} {:>7.4} {:>7.4} {:>8.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4}",
            r.scope,
            r.count,
            m.rouge1.f1,
            m.rouge2.f1,
            m.rouge_l.f1,
            m.embed_sim,
            m.meteor,
            m.bleu,
            r.classifier_accuracy,
            r.anchor_hit_rate
        );
    }
    s
}

struct Scored {
    generated: Generated,
    metrics: MetricReport,
    correct: bool,
    hit: bool,
    e_a: f64,
}

fn aggregate(scope: String, items: &[&Scored]) -> EvalRow {
    let n = items.len().max(1) as f64;
    EvalRow {
        scope,
        count: items.len(),
        metrics: MetricReport::weighted_mean(items.iter().map(|s| (&s.metrics, 1.0))),
        classifier_accuracy: items.iter().filter(|s| s.correct).count() as f64 / n,
        anchor_hit_rate: items.iter().filter(|s| s.hit).count() as f64 / n,
        anchor_energy: items.iter().map(|s| s.e_a).sum::<f64>() / n,
    }
}

/// Scores one summary per (thread, gold perspective). Outputs come back in
/// split order whatever the thread pool does.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    summarizer: &dyn Summarizer,
    threads: &[&Thread],
    split: SplitName,
    classifier: &PerspectiveClassifier,
    vocab: &Vocab,
    embedder: Option<&(dyn TokenEmbedder + Sync)>,
    anchor_score: AnchorScore,
) -> Result<EvalReport> {
    let fallback = HashEmbedder::default();
    let embedder: &(dyn TokenEmbedder + Sync) = embedder.unwrap_or(&fallback);
    let jobs: Vec<(&Thread, PerspectiveLabel, &String)> =
        threads.iter().flat_map(|t| t.summaries.iter().map(move |(l, s)| (*t, *l, s))).collect();
    let scored: Vec<Scored> = jobs
        .par_iter()
        .map(|&(t, label, reference)| -> Result<Scored> {
            let text = summarizer.summarize(t, label)?;
            let cand = tokenize_eval(&text);
            let gold = tokenize_eval(reference);
            let metrics = MetricReport::score(&cand, &gold, embedder);
            let ids = vocab.encode_tokens(&cand);
            let correct = !ids.is_empty() && classifier.predict_label(&ids)? == label;
            let anchor = anchor_tokens(label);
            let hit = cand.len() >= anchor.len() && cand[..anchor.len()] == anchor[..];
            let e_a = anchor_energy(&cand, anchor_score)[label.index()];
            Ok(Scored {
                generated: Generated {
                    thread_id: t.id.clone(),
                    perspective: label,
                    text,
                    reference: reference.clone(),
                },
                metrics,
                correct,
                hit,
                e_a,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for l in PerspectiveLabel::ALL {
        let items: Vec<&Scored> = scored.iter().filter(|s| s.generated.perspective == l).collect();
        if !items.is_empty() {
            rows.push(aggregate(l.as_str().to_string(), &items));
        }
    }
    let all: Vec<&Scored> = scored.iter().collect();
    rows.push(aggregate("OVERALL".into(), &all));
    let evaluated = threads.iter().filter(|t| !t.summaries.is_empty()).count();
    Ok(EvalReport {
        split,
        split_size: threads.len(),
        evaluated,
        skipped: threads.len() - evaluated,
        rows,
        outputs: scored.into_iter().map(|s| s.generated).collect(),
    })
}
