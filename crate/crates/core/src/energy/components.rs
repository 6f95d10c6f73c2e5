use super::classifier::{BoundClassifier, PerspectiveClassifier};
use super::lexicon::ToneLexicon;
use crate::corpus::PerspectiveLabel;
use crate::metrics::{cosine_unchecked, rouge_n};
use crate::nnkit::{Graph, Tensor, Var, Vocab, UNK};
use crate::prompt::anchor_tokens;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const K: usize = PerspectiveLabel::COUNT;

/// One value per perspective, canonical order.
pub type PerspectiveVec = [f64; K];

/// Lower clamp on combined energies before `exp(-1/E)`.
pub const ENERGY_EPS: f64 = 1e-6;
/// Lower clamp on the true-class probability before the log.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWeights {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        EnergyWeights {
            alpha1: 1.0 / 3.0,
            alpha2: 1.0 / 3.0,
            alpha3: 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyComponent {
    Perspective,
    Anchor,
    Tone,
}

impl EnergyWeights {
    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64) -> Result<Self> {
        let w = EnergyWeights { alpha1, alpha2, alpha3 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let a = [self.alpha1, self.alpha2, self.alpha3];
        if a.iter().any(|x| !x.is_finite() || *x < 0.0) || a.iter().all(|x| *x == 0.0) {
            return Err(Error::InvalidArgument(format!("energy weights must be non-negative and not all zero: {a:?}")));
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.alpha1 + self.alpha2 + self.alpha3
    }

    /// Drops one component and rescales the others so the total is kept.
    pub fn without(&self, c: EnergyComponent) -> Result<Self> {
        let total = self.total();
        let mut w = *self;
        match c {
            EnergyComponent::Perspective => w.alpha1 = 0.0,
            EnergyComponent::Anchor => w.alpha2 = 0.0,
            EnergyComponent::Tone => w.alpha3 = 0.0,
        }
        let rest = w.total();
        if rest == 0.0 {
            return Err(Error::InvalidArgument("removing this component leaves no energy".into()));
        }
        let s = total / rest;
        EnergyWeights::new(w.alpha1 * s, w.alpha2 * s, w.alpha3 * s)
    }
}

/// Which ROUGE-1 figure the anchor energy uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnchorScore {
    Recall,
    Precision,
    #[default]
    F1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub e_p: PerspectiveVec,
    pub e_a: PerspectiveVec,
    pub e_t: PerspectiveVec,
    pub e_combined: PerspectiveVec,
    pub p: PerspectiveVec,
}

pub fn combine_energy(w: &EnergyWeights, e_p: &PerspectiveVec, e_a: &PerspectiveVec, e_t: &PerspectiveVec) -> PerspectiveVec {
    std::array::from_fn(|i| w.alpha1 * e_p[i] + w.alpha2 * e_a[i] + w.alpha3 * e_t[i])
}

/// `p_i = exp(-1/E_i) / sum_j exp(-1/E_j)` with `E` clamped to `eps`.
pub fn energy_softmax_eps(e: &PerspectiveVec, eps: f64) -> PerspectiveVec {
    let z: Vec<f64> = e.iter().map(|&x| -1.0 / x.max(eps)).collect();
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ex: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = ex.iter().sum();
    std::array::from_fn(|i| ex[i] / s)
}

pub fn energy_softmax(e: &PerspectiveVec) -> PerspectiveVec {
    energy_softmax_eps(e, ENERGY_EPS)
}

/// `-ln p[y]`, with `p[y]` floored at [`PROB_FLOOR`].
pub fn perspective_loss(p: &PerspectiveVec, y: PerspectiveLabel) -> f64 {
    -p[y.index()].max(PROB_FLOOR).ln()
}

pub fn total_loss(ce: f64, lp: f64) -> Result<f64> {
    if !ce.is_finite() || !lp.is_finite() {
        return Err(Error::NonFinite("total_loss"));
    }
    Ok(ce + lp)
}

/// ROUGE-1 between each anchor and the first `j` summary tokens.
pub fn anchor_energy<S: AsRef<str>>(summary: &[S], score: AnchorScore) -> PerspectiveVec {
    std::array::from_fn(|i| {
        let label = PerspectiveLabel::from_index(i).expect("index < 5");
        let anchor = anchor_tokens(label);
        let head = &summary[..anchor.len().min(summary.len())];
        let head: Vec<&str> = head.iter().map(|s| s.as_ref()).collect();
        let r = rouge_n(&head, &anchor.as_strs(), 1);
        match score {
            AnchorScore::Recall => r.recall,
            AnchorScore::Precision => r.precision,
            AnchorScore::F1 => r.f1,
        }
    })
}

fn mean_embedding(table: &Tensor, ids: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; table.cols()];
    for &id in ids {
        for (o, x) in out.iter_mut().zip(table.row_slice(id)) {
            *o += x;
        }
    }
    if !ids.is_empty() {
        out.iter_mut().for_each(|o| *o /= ids.len() as f64);
    }
    out
}

/// `max(0, cos(mean summary embedding, mean keyword embedding))`.
pub fn tone_energy(summary: &[usize], keywords: &[Vec<usize>; K], table: &Tensor) -> PerspectiveVec {
    let s = mean_embedding(table, summary);
    std::array::from_fn(|i| cosine_unchecked(&s, &mean_embedding(table, &keywords[i])).max(0.0))
}

pub fn perspective_energy(classifier: &PerspectiveClassifier, summary: &[usize]) -> Result<PerspectiveVec> {
    classifier.predict(summary)
}

/// Energy components computed on a graph from soft decoder rows.
#[derive(Debug, Clone, Copy)]
pub struct SoftEnergy {
    pub e_p: Var,
    pub e_a: Var,
    pub e_t: Var,
    pub e: Var,
    pub p: Var,
}

impl SoftEnergy {
    /// Perspective loss node for the true label.
    pub fn loss(&self, g: &mut Graph, y: PerspectiveLabel) -> Result<Var> {
        let pt = g.select(self.p, y.index())?;
        let pt = g.clamp_min(pt, PROB_FLOOR)?;
        let l = g.log(pt)?;
        g.scale(l, -1.0)
    }

    pub fn breakdown(&self, g: &Graph) -> EnergyBreakdown {
        let v = |x: Var| -> PerspectiveVec { g.value(x).data().try_into().expect("five values") };
        EnergyBreakdown {
            e_p: v(self.e_p),
            e_a: v(self.e_a),
            e_t: v(self.e_t),
            e_combined: v(self.e),
            p: v(self.p),
        }
    }
}

/// Everything needed to score a summary: frozen classifier, lexicon and
/// anchor ids in model vocabulary space, and the weights.
#[derive(Debug, Clone)]
pub struct EnergyScorer {
    pub classifier: PerspectiveClassifier,
    pub weights: EnergyWeights,
    pub anchor_score: AnchorScore,
    keyword_ids: [Vec<usize>; K],
    anchor_ids: [Vec<usize>; K],
}

impl EnergyScorer {
    pub fn new(
        classifier: PerspectiveClassifier,
        lexicon: &ToneLexicon,
        vocab: &Vocab,
        weights: EnergyWeights,
        anchor_score: AnchorScore,
    ) -> Result<Self> {
        weights.validate()?;
        if classifier.vocab_size() != vocab.len() {
            return Err(Error::InvalidArgument(format!(
                "classifier vocabulary has {} entries, model vocabulary {}",
                classifier.vocab_size(),
                vocab.len()
            )));
        }
        let mut anchor_ids: [Vec<usize>; K] = Default::default();
        let mut keyword_ids: [Vec<usize>; K] = Default::default();
        for l in PerspectiveLabel::ALL {
            let ids = vocab.encode_tokens(&anchor_tokens(l));
            if ids.contains(&UNK) {
                return Err(Error::InvalidArgument(format!("anchor of {l} is not covered by the vocabulary")));
            }
            anchor_ids[l.index()] = ids;
            keyword_ids[l.index()] = vocab.encode_tokens(lexicon.words(l));
        }
        Ok(EnergyScorer {
            classifier,
            weights,
            anchor_score,
            keyword_ids,
            anchor_ids,
        })
    }

    pub fn keyword_ids(&self, l: PerspectiveLabel) -> &[usize] {
        &self.keyword_ids[l.index()]
    }

    /// Hard scoring of generated ids.
    pub fn breakdown(&self, ids: &[usize], vocab: &Vocab) -> Result<EnergyBreakdown> {
        let e_p = perspective_energy(&self.classifier, ids)?;
        let e_a = anchor_energy(&vocab.decode_tokens(ids), self.anchor_score);
        let e_t = tone_energy(ids, &self.keyword_ids, self.classifier.embedding());
        let e_combined = combine_energy(&self.weights, &e_p, &e_a, &e_t);
        Ok(EnergyBreakdown {
            e_p,
            e_a,
            e_t,
            e_combined,
            p: energy_softmax(&e_combined),
        })
    }

    /// Differentiable scoring of soft rows `q` (`[T, vocab]`).
    pub fn soft(&self, g: &mut Graph, q: Var) -> Result<SoftEnergy> {
        let t = g.value(q).rows();
        if t == 0 {
            return Err(Error::InvalidArgument("soft summary has no rows".into()));
        }
        let clf: BoundClassifier = self.classifier.bind(g, false);
        let pooled = clf.pool_soft(g, q)?;
        let e_p = clf.probs(g, pooled)?;

        let mut anchors = Vec::with_capacity(K);
        for ids in &self.anchor_ids {
            anchors.push(self.soft_anchor(g, q, ids, t)?);
        }
        let e_a = g.concat_cols(&anchors)?;

        let table = self.classifier.embedding();
        let mut tones = Vec::with_capacity(K);
        for kw in &self.keyword_ids {
            let k = g.constant(Tensor::row(mean_embedding(table, kw)));
            let c = g.cosine(pooled, k)?;
            tones.push(g.clamp_min(c, 0.0)?);
        }
        let e_t = g.concat_cols(&tones)?;

        let w = self.weights;
        let a = g.scale(e_p, w.alpha1)?;
        let b = g.scale(e_a, w.alpha2)?;
        let c = g.scale(e_t, w.alpha3)?;
        let ab = g.add(a, b)?;
        let e = g.add(ab, c)?;
        let clamped = g.clamp_min(e, ENERGY_EPS)?;
        let inv = g.recip(clamped)?;
        let z = g.scale(inv, -1.0)?;
        let p = g.softmax_rows(z)?;
        Ok(SoftEnergy { e_p, e_a, e_t, e, p })
    }

    fn soft_anchor(&self, g: &mut Graph, q: Var, anchor: &[usize], t: usize) -> Result<Var> {
        let j = anchor.len();
        let len = j.min(t);
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for &a in anchor {
            *counts.entry(a).or_default() += 1.0;
        }
        let cols: Vec<usize> = counts.keys().copied().collect();
        let bounds: Vec<f64> = counts.values().copied().collect();
        let head = g.slice_rows(q, 0, len)?;
        let picked = g.select_cols(head, &cols)?;
        let soft_counts = g.sum_rows(picked)?;
        let clipped = g.clamp_max_cols(soft_counts, &bounds)?;
        let overlap = g.sum(clipped)?;
        let scale = match self.anchor_score {
            AnchorScore::F1 => 2.0 / (j + len) as f64,
            AnchorScore::Recall => 1.0 / j as f64,
            AnchorScore::Precision => 1.0 / len as f64,
        };
        g.scale(overlap, scale)
    }
}
