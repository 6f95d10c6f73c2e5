use super::graph::{Graph, Var};
use super::model::{BoundModel, ModelParams, PrefixParams, Trainable};
use super::{BOS, EOS};
use crate::{Error, Result};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum DecodeMode {
    Greedy,
    Sample { temperature: f64, seed: u64 },
}

/// Generated ids (without BOS/EOS) and the distribution each step was
/// drawn from. When generation stops at EOS, the last row is the one that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub ids: Vec<usize>,
    pub probs: Vec<Vec<f64>>,
}

pub fn decode(model: &ModelParams, prefix: Option<&PrefixParams>, src: &[usize], mode: DecodeMode, max_len: usize) -> Result<Decoded> {
    let mut g = Graph::new();
    let bound = BoundModel::bind(&mut g, model, prefix, Trainable::Nothing)?;
    let memory = bound.encode(&mut g, src)?;
    decode_bound(&mut g, &bound, memory, mode, max_len, true)
}

/// Autoregressive decoding on an existing graph. With `stop_at_eos`
/// false, exactly `max_len` steps are taken.
pub fn decode_bound(
    g: &mut Graph,
    bound: &BoundModel,
    memory: Var,
    mode: DecodeMode,
    max_len: usize,
    stop_at_eos: bool,
) -> Result<Decoded> {
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be at least 1".into()));
    }
    let max_len = max_len.min(bound.config.max_len);
    let mut rng = match mode {
        DecodeMode::Sample { temperature, seed } => {
            if !(temperature > 0.0 && temperature.is_finite()) {
                return Err(Error::InvalidArgument(format!("temperature must be positive, got {temperature}")));
            }
            Some(ChaCha8Rng::seed_from_u64(seed))
        }
        DecodeMode::Greedy => None,
    };
    let mut cache = bound.start_decoding(g, memory)?;
    let mut token = BOS;
    let mut out = Decoded { ids: Vec::new(), probs: Vec::new() };
    for _ in 0..max_len {
        let last = bound.decode_step(g, &mut cache, token)?;
        let p = g.softmax_rows(last)?;
        let probs = g.value(p).data().to_vec();
        let next = match (mode, rng.as_mut()) {
            (DecodeMode::Sample { temperature, .. }, Some(rng)) => {
                let row = g.value(last).data();
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = row.iter().map(|x| ((x - max) / temperature).exp()).collect();
                WeightedIndex::new(&w)
                    .map_err(|e| Error::InvalidArgument(format!("sampling weights: {e}")))?
                    .sample(rng)
            }
            _ => argmax(&probs),
        };
        out.probs.push(probs);
        if stop_at_eos && next == EOS {
            break;
        }
        out.ids.push(next);
        token = next;
    }
    Ok(out)
}

/// First index of the maximum.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
