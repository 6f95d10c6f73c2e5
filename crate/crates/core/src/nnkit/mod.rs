//! Minimal numeric core: tensors, tape autodiff, a small encoder-decoder
//! transformer with key/value prefixes, Adam, decoding and checkpoints.

pub mod checkpoint;
pub mod decode;
pub mod gradcheck;
pub mod graph;
pub mod model;
pub mod optim;
pub mod tensor;
pub mod vocab;

pub use checkpoint::{file_sha256, sha256_hex, Checkpoint};
pub use decode::{argmax, decode, decode_bound, DecodeMode, Decoded};
pub use graph::{softmax_rows, Gradients, Graph, Var};
pub use model::{
    ce_loss, forward, forward_with, BoundModel, DecodeCache, ForwardOutput, ModelConfig, ModelParams, PrefixParams, Stream, Trainable,
};
pub use optim::{Adam, AdamConfig, TrainMask};
pub use tensor::Tensor;
pub use vocab::{build_vocab, Vocab, BOS, EOS, PAD, RESERVED, UNK};
