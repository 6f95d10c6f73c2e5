//! Perspective-controlled answer summarization for community question
//! answering threads.
//!
//! The crate is organized bottom-up:
//!
//! - [`corpus`]: annotated thread model, JSONL ingestion, statistics,
//!   annotator agreement and a synthetic corpus generator.
//! - [`prompt`]: perspective profiles and the prompt template.
//! - [`metrics`]: ROUGE, BLEU, METEOR-lite and embedding similarity.
//! - [`nnkit`]: tensors, reverse-mode autodiff, a miniature encoder-decoder
//!   transformer with prefix tuning, Adam and checkpoints.
//! - [`energy`]: perspective classifier, anchor/tone/perspective energies and
//!   the energy-controlled perspective loss.
//! - [`harness`]: pretraining, prefix tuning, evaluation, ablations and
//!   candidate reranking.

pub mod corpus;
pub mod energy;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nnkit;
pub mod prompt;

pub use error::{Error, Result};
