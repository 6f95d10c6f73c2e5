//! Training, evaluation and ablation runs.

pub mod config;
pub mod data;

pub use config::{LpSource, ModelSpec, OptimSpec, RunConfig};
pub use data::{load_dataset, plain_examples, prepare, prompt_examples, Example, Prepared};
pub mod train;

pub use train::{pretrain_base, train_prefix, write_step_log, PrefixOutcome, PretrainOutcome, StepRecord};
pub mod eval;

pub use eval::{evaluate, render_table, EvalReport, EvalRow, Generated, GoldSummarizer, ModelSummarizer, Summarizer, TableEmbedder};
pub mod ablation;

pub use ablation::{run_ablation, run_ablation_with, standard_matrix, AblationReport, AblationSpec, Range, RunResult, VariantSummary};
pub mod rerank;

pub use rerank::{read_candidates, rerank, Candidate, NumberedCandidates, RankedCandidate, RerankDiagnostic, RerankOutcome};
