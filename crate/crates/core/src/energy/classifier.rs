//! Mean-pooled embedding classifier over the five perspectives.

use crate::corpus::{PerspectiveLabel, Thread};
use crate::nnkit::{Adam, AdamConfig, Checkpoint, Graph, Tensor, TrainMask, Var, Vocab};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const K: usize = PerspectiveLabel::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Std of the random embedding init; the linear layer starts at zero.
    pub init_std: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            dim: 32,
            epochs: 15,
            batch_size: 32,
            lr: 0.01,
            init_std: 0.1,
        }
    }
}

/// A labelled token sequence.
pub type LabeledIds = (Vec<usize>, PerspectiveLabel);

#[derive(Debug, Clone, PartialEq)]
pub struct PerspectiveClassifier {
    embed: Tensor,
    w: Tensor,
    b: Tensor,
}

/// Classifier parameters placed on a graph.
#[derive(Debug, Clone, Copy)]
pub struct BoundClassifier {
    pub embed: Var,
    pub w: Var,
    pub b: Var,
}

impl BoundClassifier {
    /// Class probabilities `[1, 5]` from a pooled embedding `[1, dim]`
    /// (or `[n, dim]` for a batch).
    pub fn probs(&self, g: &mut Graph, pooled: Var) -> Result<Var> {
        let logits = self.logits(g, pooled)?;
        g.softmax_rows(logits)
    }

    fn logits(&self, g: &mut Graph, pooled: Var) -> Result<Var> {
        let h = g.matmul(pooled, self.w)?;
        g.add_row(h, self.b)
    }

    /// Mean of the token embeddings of `ids`, `[1, dim]`.
    pub fn pool_ids(&self, g: &mut Graph, ids: &[usize]) -> Result<Var> {
        if ids.is_empty() {
            return Err(Error::InvalidArgument("cannot classify an empty sequence".into()));
        }
        let e = g.embedding(self.embed, ids)?;
        g.mean_rows(e)
    }

    /// Mean expected embedding of soft rows `q` (`[T, vocab]`), `[1, dim]`.
    pub fn pool_soft(&self, g: &mut Graph, q: Var) -> Result<Var> {
        if g.value(q).rows() == 0 {
            return Err(Error::InvalidArgument("cannot classify an empty sequence".into()));
        }
        let e = g.matmul(q, self.embed)?;
        g.mean_rows(e)
    }
}

impl PerspectiveClassifier {
    /// All parameters zero; every prediction is uniform.
    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        PerspectiveClassifier {
            embed: Tensor::zeros(&[vocab_size, dim]),
            w: Tensor::zeros(&[dim, K]),
            b: Tensor::zeros(&[K]),
        }
    }

    pub fn init(vocab_size: usize, config: &ClassifierConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PerspectiveClassifier {
            embed: Tensor::randn(&[vocab_size, config.dim], config.init_std, &mut rng),
            w: Tensor::zeros(&[config.dim, K]),
            b: Tensor::zeros(&[K]),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.embed.rows()
    }

    pub fn dim(&self) -> usize {
        self.embed.cols()
    }

    /// Token embedding table, also used as the tone embedder.
    pub fn embedding(&self) -> &Tensor {
        &self.embed
    }

    pub fn bind(&self, g: &mut Graph, trainable: bool) -> BoundClassifier {
        BoundClassifier {
            embed: g.leaf(self.embed.clone(), trainable),
            w: g.leaf(self.w.clone(), trainable),
            b: g.leaf(self.b.clone(), trainable),
        }
    }

    pub fn predict(&self, ids: &[usize]) -> Result<[f64; K]> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false);
        let pooled = bound.pool_ids(&mut g, ids)?;
        let p = bound.probs(&mut g, pooled)?;
        Ok(g.value(p).data().try_into().expect("five classes"))
    }

    pub fn predict_label(&self, ids: &[usize]) -> Result<PerspectiveLabel> {
        let p = self.predict(ids)?;
        Ok(PerspectiveLabel::from_index(crate::nnkit::argmax(&p)).expect("index < 5"))
    }

    pub fn accuracy(&self, examples: &[LabeledIds]) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::InvalidArgument("accuracy over no examples".into()));
        }
        let mut hits = 0;
        for (ids, label) in examples {
            if self.predict_label(ids)? == *label {
                hits += 1;
            }
        }
        Ok(hits as f64 / examples.len() as f64)
    }

    fn groups(&self) -> BTreeMap<String, Tensor> {
        BTreeMap::from([
            ("clf.embed".to_string(), self.embed.clone()),
            ("clf.w".to_string(), self.w.clone()),
            ("clf.b".to_string(), self.b.clone()),
        ])
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            meta: serde_json::json!({ "kind": "classifier" }),
            groups: self.groups(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.meta.get("kind").and_then(|k| k.as_str()) != Some("classifier") {
            return Err(Error::Checkpoint("not a classifier checkpoint".into()));
        }
        let get = |n: &str| ckpt.groups.get(n).cloned().ok_or_else(|| Error::Checkpoint(format!("missing `{n}`")));
        let c = PerspectiveClassifier {
            embed: get("clf.embed")?,
            w: get("clf.w")?,
            b: get("clf.b")?,
        };
        if c.w.shape() != [c.dim(), K] || c.b.numel() != K {
            return Err(Error::Checkpoint("classifier shapes are inconsistent".into()));
        }
        Ok(c)
    }
}

/// Gold spans as labelled id sequences; spans with no tokens are skipped.
pub fn span_examples(threads: &[&Thread], vocab: &Vocab) -> Vec<LabeledIds> {
    let mut out = Vec::new();
    for t in threads {
        for s in &t.spans {
            let ids = vocab.encode(&s.text);
            if !ids.is_empty() {
                out.push((ids, s.label));
            }
        }
    }
    out
}

/// Cross-entropy training with Adam on shuffled mini-batches.
pub fn train_classifier(
    examples: &[LabeledIds],
    vocab_size: usize,
    config: &ClassifierConfig,
    seed: u64,
) -> Result<PerspectiveClassifier> {
    for l in PerspectiveLabel::ALL {
        if !examples.iter().any(|(_, y)| *y == l) {
            return Err(Error::InvalidArgument(format!("no training spans for {l}")));
        }
    }
    if config.batch_size == 0 || config.dim == 0 {
        return Err(Error::InvalidArgument("batch_size and dim must be positive".into()));
    }
    let mut clf = PerspectiveClassifier::init(vocab_size, config, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut opt = Adam::new(AdamConfig { lr: config.lr, ..Default::default() });
    let mut params = clf.groups();
    let mask = TrainMask::all_of(&params);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut g = Graph::new();
            let bound = BoundClassifier {
                embed: g.param(params["clf.embed"].clone()),
                w: g.param(params["clf.w"].clone()),
                b: g.param(params["clf.b"].clone()),
            };
            let mut pooled = Vec::with_capacity(batch.len());
            for &i in batch {
                pooled.push(bound.pool_ids(&mut g, &examples[i].0)?);
            }
            let x = g.concat_rows(&pooled)?;
            let logits = bound.logits(&mut g, x)?;
            let targets: Vec<usize> = batch.iter().map(|&i| examples[i].1.index()).collect();
            let loss = g.cross_entropy_with(logits, &targets, None)?;
            let mut grads = g.backward(loss)?;
            let named = BTreeMap::from([
                ("clf.embed".to_string(), grads.take(bound.embed).expect("trainable")),
                ("clf.w".to_string(), grads.take(bound.w).expect("trainable")),
                ("clf.b".to_string(), grads.take(bound.b).expect("trainable")),
            ]);
            opt.step(&mut params, &mask, &named)?;
        }
    }
    clf.embed = params.remove("clf.embed").expect("present");
    clf.w = params.remove("clf.w").expect("present");
    clf.b = params.remove("clf.b").expect("present");
    Ok(clf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{split_dataset, synthesize_corpus, SplitName, SynthConfig};
    use crate::nnkit::build_vocab;

    fn data() -> (Vec<LabeledIds>, Vec<LabeledIds>, usize) {
        let d = synthesize_corpus(&SynthConfig::with_threads(150), 7).unwrap();
        let split = split_dataset(&d, (0.8, 0.1, 0.1), 1).unwrap();
        let train = d.subset(&split, SplitName::Train);
        let test = d.subset(&split, SplitName::Test);
        let vocab = build_vocab(train.iter().flat_map(|t| t.answers.iter()), 2000).unwrap();
        (span_examples(&train, &vocab), span_examples(&test, &vocab), vocab.len())
    }

    #[test]
    fn zero_classifier_is_uniform() {
        let c = PerspectiveClassifier::zeros(10, 4);
        for p in c.predict(&[4, 5, 9]).unwrap() {
            assert!((p - 0.2).abs() < 1e-15);
        }
        assert!(c.predict(&[]).is_err());
    }

    #[test]
    fn learns_separable_spans_deterministically() {
        let (train, test, v) = data();
        let cfg = ClassifierConfig { epochs: 5, ..Default::default() };
        let c = train_classifier(&train, v, &cfg, 3).unwrap();
        assert!(c.accuracy(&test).unwrap() >= 0.95);
        assert_eq!(c, train_classifier(&train, v, &cfg, 3).unwrap());
        let back = PerspectiveClassifier::from_checkpoint(&Checkpoint::from_bytes(&c.to_checkpoint().to_bytes()).unwrap());
        assert_eq!(back.unwrap(), c);
    }

    #[test]
    fn missing_class_is_error() {
        let ex = vec![(vec![4], PerspectiveLabel::Cause)];
        assert!(train_classifier(&ex, 10, &ClassifierConfig::default(), 1).is_err());
    }
}
