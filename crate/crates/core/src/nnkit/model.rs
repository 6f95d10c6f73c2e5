//! Pre-LN encoder-decoder transformer with optional key/value prefixes.

use super::checkpoint::{self, Checkpoint};
use super::graph::{Gradients, Graph, Var};
use super::tensor::Tensor;
use super::{BOS, EOS};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub max_len: usize,
}

impl ModelConfig {
    /// 2+2 layers, 4 heads, width 64, feed-forward 128, 512 positions.
    pub fn toy(vocab_size: usize) -> Self {
        ModelConfig {
            vocab_size,
            d_model: 64,
            n_heads: 4,
            d_ff: 128,
            enc_layers: 2,
            dec_layers: 2,
            max_len: 512,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size <= super::RESERVED.len() {
            return Err(Error::InvalidArgument("vocab_size must exceed the reserved ids".into()));
        }
        if self.n_heads == 0 || self.d_model == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::InvalidArgument(format!(
                "d_model {} is not divisible into {} heads",
                self.d_model, self.n_heads
            )));
        }
        if self.d_ff == 0 || self.max_len == 0 {
            return Err(Error::InvalidArgument("d_ff and max_len must be positive".into()));
        }
        Ok(())
    }

    fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        let (d, f, v) = (self.d_model, self.d_ff, self.vocab_size);
        let mut out = vec![("embed".to_string(), vec![v, d])];
        let attn = |out: &mut Vec<(String, Vec<usize>)>, p: &str| {
            for w in ["wq", "wk", "wv", "wo"] {
                out.push((format!("{p}.{w}"), vec![d, d]));
            }
        };
        let ln = |out: &mut Vec<(String, Vec<usize>)>, p: &str| {
            out.push((format!("{p}.g"), vec![d]));
            out.push((format!("{p}.b"), vec![d]));
        };
        let ff = |out: &mut Vec<(String, Vec<usize>)>, p: &str| {
            out.push((format!("{p}.w1"), vec![d, f]));
            out.push((format!("{p}.b1"), vec![f]));
            out.push((format!("{p}.w2"), vec![f, d]));
            out.push((format!("{p}.b2"), vec![d]));
        };
        for l in 0..self.enc_layers {
            ln(&mut out, &format!("enc.{l}.ln1"));
            attn(&mut out, &format!("enc.{l}.self"));
            ln(&mut out, &format!("enc.{l}.ln2"));
            ff(&mut out, &format!("enc.{l}.ff"));
        }
        ln(&mut out, "enc.ln_f");
        for l in 0..self.dec_layers {
            ln(&mut out, &format!("dec.{l}.ln1"));
            attn(&mut out, &format!("dec.{l}.self"));
            ln(&mut out, &format!("dec.{l}.ln2"));
            attn(&mut out, &format!("dec.{l}.cross"));
            ln(&mut out, &format!("dec.{l}.ln3"));
            ff(&mut out, &format!("dec.{l}.ff"));
        }
        ln(&mut out, "dec.ln_f");
        out.push(("out.w".into(), vec![d, v]));
        out.push(("out.b".into(), vec![v]));
        out
    }
}

/// Base model weights as named groups.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    groups: BTreeMap<String, Tensor>,
}

impl ModelParams {
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut groups = BTreeMap::new();
        for (name, shape) in config.shapes() {
            let t = if name.ends_with(".g") {
                Tensor::filled(&shape, 1.0)
            } else if shape.len() == 1 {
                Tensor::zeros(&shape)
            } else if name == "embed" {
                Tensor::randn(&shape, 1.0, &mut rng)
            } else {
                Tensor::randn(&shape, 1.0 / (shape[0] as f64).sqrt(), &mut rng)
            };
            groups.insert(name, t);
        }
        Ok(ModelParams { config, groups })
    }

    pub fn groups(&self) -> &BTreeMap<String, Tensor> {
        &self.groups
    }

    pub fn groups_mut(&mut self) -> &mut BTreeMap<String, Tensor> {
        &mut self.groups
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.groups.get(name).ok_or_else(|| Error::UnknownGroup(name.into()))
    }

    pub fn num_params(&self) -> usize {
        self.groups.values().map(Tensor::numel).sum()
    }

    /// Checkpoint bytes; `meta` is stored next to the config.
    pub fn to_checkpoint(&self, meta: serde_json::Value) -> Result<Checkpoint> {
        Ok(Checkpoint {
            meta: serde_json::json!({ "kind": "base", "config": self.config, "extra": meta }),
            groups: self.groups.clone(),
        })
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<(Self, serde_json::Value)> {
        if ckpt.meta.get("kind").and_then(|k| k.as_str()) != Some("base") {
            return Err(Error::Checkpoint("not a base model checkpoint".into()));
        }
        let config: ModelConfig = serde_json::from_value(ckpt.meta["config"].clone())?;
        config.validate()?;
        for (name, shape) in config.shapes() {
            match ckpt.groups.get(&name) {
                Some(t) if t.shape() == shape.as_slice() => {}
                Some(t) => {
                    return Err(Error::Checkpoint(format!("group `{name}` has shape {:?}, want {shape:?}", t.shape())))
                }
                None => return Err(Error::Checkpoint(format!("missing group `{name}`"))),
            }
        }
        if ckpt.groups.len() != config.shapes().len() {
            return Err(Error::Checkpoint("unexpected extra parameter groups".into()));
        }
        let extra = ckpt.meta.get("extra").cloned().unwrap_or(serde_json::Value::Null);
        Ok((ModelParams { config, groups: ckpt.groups.clone() }, extra))
    }

    /// SHA-256 over the parameter bytes and config.
    pub fn hash(&self) -> String {
        let ckpt = self.to_checkpoint(serde_json::Value::Null).expect("config serializes");
        checkpoint::sha256_hex(&ckpt.to_bytes())
    }
}

/// The three attention streams that carry prefixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    EncSelf,
    DecSelf,
    DecCross,
}

impl Stream {
    pub const ALL: [Stream; 3] = [Stream::EncSelf, Stream::DecSelf, Stream::DecCross];

    pub fn as_str(self) -> &'static str {
        match self {
            Stream::EncSelf => "enc_self",
            Stream::DecSelf => "dec_self",
            Stream::DecCross => "dec_cross",
        }
    }
}

fn prefix_name(stream: Stream, layer: usize, kv: &str) -> String {
    format!("prefix.{}.{layer}.{kv}", stream.as_str())
}

/// Key/value prefixes for every layer of every attention stream, each of
/// shape `[prefix_len, d_model]` (heads side by side).
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixParams {
    pub prefix_len: usize,
    groups: BTreeMap<String, Tensor>,
}

impl PrefixParams {
    fn layout(config: &ModelConfig) -> Vec<(Stream, usize)> {
        let mut out = Vec::new();
        for s in Stream::ALL {
            let n = if s == Stream::EncSelf { config.enc_layers } else { config.dec_layers };
            out.extend((0..n).map(|l| (s, l)));
        }
        out
    }

    pub fn zeros(config: &ModelConfig, prefix_len: usize) -> Result<Self> {
        Self::build(config, prefix_len, Tensor::zeros)
    }

    pub fn init(config: &ModelConfig, prefix_len: usize, std: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::build(config, prefix_len, |shape| Tensor::randn(shape, std, &mut rng))
    }

    fn build(config: &ModelConfig, prefix_len: usize, mut f: impl FnMut(&[usize]) -> Tensor) -> Result<Self> {
        if prefix_len == 0 {
            return Err(Error::InvalidArgument("prefix_len must be at least 1".into()));
        }
        let mut groups = BTreeMap::new();
        for (s, l) in Self::layout(config) {
            for kv in ["k", "v"] {
                groups.insert(prefix_name(s, l, kv), f(&[prefix_len, config.d_model]));
            }
        }
        Ok(PrefixParams { prefix_len, groups })
    }

    pub fn groups(&self) -> &BTreeMap<String, Tensor> {
        &self.groups
    }

    pub fn groups_mut(&mut self) -> &mut BTreeMap<String, Tensor> {
        &mut self.groups
    }

    pub fn num_params(&self) -> usize {
        self.groups.values().map(Tensor::numel).sum()
    }

    pub fn check_compatible(&self, config: &ModelConfig) -> Result<()> {
        let layout = Self::layout(config);
        if self.groups.len() != 2 * layout.len() {
            return Err(Error::Shape("prefix layer count does not match the model".into()));
        }
        for (s, l) in layout {
            for kv in ["k", "v"] {
                let name = prefix_name(s, l, kv);
                match self.groups.get(&name) {
                    Some(t) if t.shape() == [self.prefix_len, config.d_model] => {}
                    _ => return Err(Error::Shape(format!("prefix group `{name}` missing or misshapen"))),
                }
            }
        }
        Ok(())
    }

    pub fn to_checkpoint(&self, meta: serde_json::Value) -> Checkpoint {
        Checkpoint {
            meta: serde_json::json!({ "kind": "prefix", "prefix_len": self.prefix_len, "extra": meta }),
            groups: self.groups.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<(Self, serde_json::Value)> {
        if ckpt.meta.get("kind").and_then(|k| k.as_str()) != Some("prefix") {
            return Err(Error::Checkpoint("not a prefix checkpoint".into()));
        }
        let prefix_len = ckpt.meta["prefix_len"]
            .as_u64()
            .ok_or_else(|| Error::Checkpoint("missing prefix_len".into()))? as usize;
        let extra = ckpt.meta.get("extra").cloned().unwrap_or(serde_json::Value::Null);
        Ok((PrefixParams { prefix_len, groups: ckpt.groups.clone() }, extra))
    }
}

/// Which parameters become differentiable leaves when binding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trainable {
    Nothing,
    Base,
    Prefix,
}

/// Sinusoidal position table rows `0..n`.
pub fn positions(n: usize, d: usize) -> Tensor {
    let mut out = vec![0.0; n * d];
    for p in 0..n {
        for i in 0..d / 2 {
            let angle = p as f64 / 10000f64.powf(2.0 * i as f64 / d as f64);
            out[p * d + 2 * i] = angle.sin();
            out[p * d + 2 * i + 1] = angle.cos();
        }
    }
    Tensor::from_raw(vec![n, d], out)
}

/// Per-layer keys and values seen so far by incremental decoding.
pub struct DecodeCache {
    cross: Vec<(Var, Var)>,
    selfs: Vec<Option<(Var, Var)>>,
    pos: usize,
}

/// A model whose parameters have been placed on a [`Graph`].
pub struct BoundModel {
    pub config: ModelConfig,
    base: BTreeMap<String, Var>,
    prefix: Option<BTreeMap<String, Var>>,
    prefix_len: usize,
    /// When false, prefix positions are masked out of every attention.
    pub prefix_visible: bool,
}

impl BoundModel {
    pub fn bind(g: &mut Graph, model: &ModelParams, prefix: Option<&PrefixParams>, trainable: Trainable) -> Result<Self> {
        let base = model
            .groups
            .iter()
            .map(|(k, t)| (k.clone(), g.leaf(t.clone(), trainable == Trainable::Base)))
            .collect();
        let (prefix, prefix_len) = match prefix {
            Some(p) => {
                p.check_compatible(&model.config)?;
                let vars = p
                    .groups
                    .iter()
                    .map(|(k, t)| (k.clone(), g.leaf(t.clone(), trainable == Trainable::Prefix)))
                    .collect();
                (Some(vars), p.prefix_len)
            }
            None => {
                if trainable == Trainable::Prefix {
                    return Err(Error::InvalidArgument("prefix training without prefix parameters".into()));
                }
                (None, 0)
            }
        };
        Ok(BoundModel {
            config: model.config.clone(),
            base,
            prefix,
            prefix_len,
            prefix_visible: true,
        })
    }

    fn p(&self, name: &str) -> Var {
        self.base[name]
    }

    /// Gradients of every bound group that received one.
    pub fn collect_grads(&self, grads: &mut Gradients) -> BTreeMap<String, Tensor> {
        let mut out = BTreeMap::new();
        let all = self.base.iter().chain(self.prefix.iter().flatten());
        for (name, &v) in all {
            if let Some(t) = grads.take(v) {
                out.insert(name.clone(), t);
            }
        }
        out
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        if ids.len() > self.config.max_len {
            return Err(Error::TooLong { len: ids.len(), max: self.config.max_len });
        }
        if let Some(&id) = ids.iter().find(|&&id| id >= self.config.vocab_size) {
            return Err(Error::TokenOutOfRange { id, size: self.config.vocab_size });
        }
        if ids.is_empty() {
            return Err(Error::InvalidArgument("empty id sequence".into()));
        }
        Ok(())
    }

    fn embed(&self, g: &mut Graph, ids: &[usize]) -> Result<Var> {
        let e = g.embedding(self.p("embed"), ids)?;
        let pos = g.constant(positions(ids.len(), self.config.d_model));
        g.add(e, pos)
    }

    fn layer_norm(&self, g: &mut Graph, x: Var, name: &str) -> Result<Var> {
        g.layer_norm_rows(x, self.p(&format!("{name}.g")), self.p(&format!("{name}.b")))
    }

    fn feed_forward(&self, g: &mut Graph, x: Var, name: &str) -> Result<Var> {
        let h = g.matmul(x, self.p(&format!("{name}.w1")))?;
        let h = g.add_row(h, self.p(&format!("{name}.b1")))?;
        let h = g.gelu(h)?;
        let h = g.matmul(h, self.p(&format!("{name}.w2")))?;
        g.add_row(h, self.p(&format!("{name}.b2")))
    }

    /// Key and value projections of `xkv`, with the stream's prefix rows
    /// in front.
    fn keys_values(&self, g: &mut Graph, xkv: Var, name: &str, stream: Stream, layer: usize) -> Result<(Var, Var)> {
        let mut k = g.matmul(xkv, self.p(&format!("{name}.wk")))?;
        let mut v = g.matmul(xkv, self.p(&format!("{name}.wv")))?;
        if let Some(pre) = &self.prefix {
            k = g.concat_rows(&[pre[&prefix_name(stream, layer, "k")], k])?;
            v = g.concat_rows(&[pre[&prefix_name(stream, layer, "v")], v])?;
        }
        Ok((k, v))
    }

    fn plen(&self) -> usize {
        if self.prefix.is_some() {
            self.prefix_len
        } else {
            0
        }
    }

    /// Multi-head attention of projected queries over keys and values,
    /// followed by the output projection.
    fn attend(&self, g: &mut Graph, q: Var, k: Var, v: Var, mask: Option<&[bool]>, name: &str) -> Result<Var> {
        let hd = self.config.head_dim();
        let scale = 1.0 / (hd as f64).sqrt();
        let mut heads = Vec::with_capacity(self.config.n_heads);
        for h in 0..self.config.n_heads {
            let (a, b) = (h * hd, (h + 1) * hd);
            let qh = g.slice_cols(q, a, b)?;
            let kh = g.slice_cols(k, a, b)?;
            let vh = g.slice_cols(v, a, b)?;
            let s = g.matmul_t(qh, kh)?;
            let s = g.scale(s, scale)?;
            let p = g.masked_softmax_rows(s, mask)?;
            heads.push(g.matmul(p, vh)?);
        }
        let o = if heads.len() == 1 { heads[0] } else { g.concat_cols(&heads)? };
        g.matmul(o, self.p(&format!("{name}.wo")))
    }

    #[allow(clippy::too_many_arguments)]
    fn attention(
        &self,
        g: &mut Graph,
        xq: Var,
        xkv: Var,
        name: &str,
        stream: Stream,
        layer: usize,
        causal: bool,
    ) -> Result<Var> {
        let q = g.matmul(xq, self.p(&format!("{name}.wq")))?;
        let (k, v) = self.keys_values(g, xkv, name, stream, layer)?;
        let plen = self.plen();
        let tq = g.value(q).rows();
        let tk = g.value(k).rows();
        let mask = if causal || (plen > 0 && !self.prefix_visible) {
            let mut m = vec![true; tq * tk];
            for i in 0..tq {
                for j in 0..tk {
                    let visible = if j < plen { self.prefix_visible } else { !causal || j - plen <= i };
                    m[i * tk + j] = visible;
                }
            }
            Some(m)
        } else {
            None
        };
        self.attend(g, q, k, v, mask.as_deref(), name)
    }

    /// Encoder states `[|src|, d_model]`.
    pub fn encode(&self, g: &mut Graph, src: &[usize]) -> Result<Var> {
        self.check_ids(src)?;
        let mut x = self.embed(g, src)?;
        for l in 0..self.config.enc_layers {
            let h = self.layer_norm(g, x, &format!("enc.{l}.ln1"))?;
            let a = self.attention(g, h, h, &format!("enc.{l}.self"), Stream::EncSelf, l, false)?;
            x = g.add(x, a)?;
            let h = self.layer_norm(g, x, &format!("enc.{l}.ln2"))?;
            let f = self.feed_forward(g, h, &format!("enc.{l}.ff"))?;
            x = g.add(x, f)?;
        }
        self.layer_norm(g, x, "enc.ln_f")
    }

    /// Decoder logits `[|tgt_in|, vocab]` given encoder states.
    pub fn decode(&self, g: &mut Graph, memory: Var, tgt_in: &[usize]) -> Result<Var> {
        self.check_ids(tgt_in)?;
        let mut y = self.embed(g, tgt_in)?;
        for l in 0..self.config.dec_layers {
            let h = self.layer_norm(g, y, &format!("dec.{l}.ln1"))?;
            let a = self.attention(g, h, h, &format!("dec.{l}.self"), Stream::DecSelf, l, true)?;
            y = g.add(y, a)?;
            let h = self.layer_norm(g, y, &format!("dec.{l}.ln2"))?;
            let c = self.attention(g, h, memory, &format!("dec.{l}.cross"), Stream::DecCross, l, false)?;
            y = g.add(y, c)?;
            let h = self.layer_norm(g, y, &format!("dec.{l}.ln3"))?;
            let f = self.feed_forward(g, h, &format!("dec.{l}.ff"))?;
            y = g.add(y, f)?;
        }
        let h = self.layer_norm(g, y, "dec.ln_f")?;
        let logits = g.matmul(h, self.p("out.w"))?;
        g.add_row(logits, self.p("out.b"))
    }

    /// Empty cache for [`BoundModel::decode_step`]; cross-attention keys
    /// and values of `memory` are computed here once.
    pub fn start_decoding(&self, g: &mut Graph, memory: Var) -> Result<DecodeCache> {
        let mut cross = Vec::with_capacity(self.config.dec_layers);
        let mut selfs = Vec::with_capacity(self.config.dec_layers);
        for l in 0..self.config.dec_layers {
            cross.push(self.keys_values(g, memory, &format!("dec.{l}.cross"), Stream::DecCross, l)?);
            let pre = self.prefix.as_ref().map(|p| (p[&prefix_name(Stream::DecSelf, l, "k")], p[&prefix_name(Stream::DecSelf, l, "v")]));
            selfs.push(pre);
        }
        Ok(DecodeCache { cross, selfs, pos: 0 })
    }

    /// Logits `[1, vocab]` for the next position after feeding `token`.
    /// Matches the last row of [`BoundModel::decode`] on the same history.
    pub fn decode_step(&self, g: &mut Graph, cache: &mut DecodeCache, token: usize) -> Result<Var> {
        self.check_ids(&[token])?;
        if cache.pos >= self.config.max_len {
            return Err(Error::TooLong { len: cache.pos + 1, max: self.config.max_len });
        }
        let e = g.embedding(self.p("embed"), &[token])?;
        let pos = positions(cache.pos + 1, self.config.d_model);
        let pos = g.constant(Tensor::row(pos.row_slice(cache.pos).to_vec()));
        let mut y = g.add(e, pos)?;
        let plen = self.plen();
        let self_mask = |tk: usize| -> Option<Vec<bool>> {
            (plen > 0 && !self.prefix_visible).then(|| (0..tk).map(|j| j >= plen).collect())
        };
        for l in 0..self.config.dec_layers {
            let name = format!("dec.{l}.self");
            let h = self.layer_norm(g, y, &format!("dec.{l}.ln1"))?;
            let q = g.matmul(h, self.p(&format!("{name}.wq")))?;
            let kn = g.matmul(h, self.p(&format!("{name}.wk")))?;
            let vn = g.matmul(h, self.p(&format!("{name}.wv")))?;
            let (k, v) = match cache.selfs[l] {
                Some((k, v)) => (g.concat_rows(&[k, kn])?, g.concat_rows(&[v, vn])?),
                None => (kn, vn),
            };
            cache.selfs[l] = Some((k, v));
            let mask = self_mask(g.value(k).rows());
            let a = self.attend(g, q, k, v, mask.as_deref(), &name)?;
            y = g.add(y, a)?;

            let name = format!("dec.{l}.cross");
            let h = self.layer_norm(g, y, &format!("dec.{l}.ln2"))?;
            let q = g.matmul(h, self.p(&format!("{name}.wq")))?;
            let (k, v) = cache.cross[l];
            let mask = self_mask(g.value(k).rows());
            let c = self.attend(g, q, k, v, mask.as_deref(), &name)?;
            y = g.add(y, c)?;
            let h = self.layer_norm(g, y, &format!("dec.{l}.ln3"))?;
            let f = self.feed_forward(g, h, &format!("dec.{l}.ff"))?;
            y = g.add(y, f)?;
        }
        cache.pos += 1;
        let h = self.layer_norm(g, y, "dec.ln_f")?;
        let logits = g.matmul(h, self.p("out.w"))?;
        g.add_row(logits, self.p("out.b"))
    }

    /// Teacher-forced pass: decoder input is `[BOS] + tgt`, targets are
    /// `tgt + [EOS]`. Returns logits and targets.
    pub fn teacher_forced(&self, g: &mut Graph, memory: Var, tgt: &[usize]) -> Result<(Var, Vec<usize>)> {
        let mut input = Vec::with_capacity(tgt.len() + 1);
        input.push(BOS);
        input.extend_from_slice(tgt);
        let mut targets = tgt.to_vec();
        targets.push(EOS);
        Ok((self.decode(g, memory, &input)?, targets))
    }
}

/// Output of [`forward`].
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub logits: Tensor,
    pub probs: Tensor,
}

/// Teacher-forced logits for decoder input `tgt_in` (no BOS added), plus
/// their softmax rows.
pub fn forward(model: &ModelParams, prefix: Option<&PrefixParams>, src: &[usize], tgt_in: &[usize]) -> Result<ForwardOutput> {
    forward_with(model, prefix, src, tgt_in, true)
}

/// As [`forward`], with prefix positions optionally masked out.
pub fn forward_with(
    model: &ModelParams,
    prefix: Option<&PrefixParams>,
    src: &[usize],
    tgt_in: &[usize],
    prefix_visible: bool,
) -> Result<ForwardOutput> {
    let mut g = Graph::new();
    let mut bound = BoundModel::bind(&mut g, model, prefix, Trainable::Nothing)?;
    bound.prefix_visible = prefix_visible;
    let mem = bound.encode(&mut g, src)?;
    let logits = bound.decode(&mut g, mem, tgt_in)?;
    let probs = g.softmax_rows(logits)?;
    Ok(ForwardOutput {
        logits: g.value(logits).clone(),
        probs: g.value(probs).clone(),
    })
}

/// Mean cross-entropy of `targets` (PAD skipped) under `logits`.
pub fn ce_loss(logits: &Tensor, targets: &[usize]) -> Result<f64> {
    let mut g = Graph::new();
    let l = g.constant(logits.clone());
    let loss = g.cross_entropy(l, targets)?;
    Ok(g.value(loss).item())
}
