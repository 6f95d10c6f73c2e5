use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{LpSource, OptimSpec, RunConfig};
use super::data::{plain_examples, prompt_examples, Example, Prepared};
use crate::corpus::SplitName;
use crate::energy::{EnergyScorer, PerspectiveVec};
use crate::nnkit::{decode_bound, Adam, AdamConfig, BoundModel, DecodeMode, Graph, ModelParams, PrefixParams, Tensor, TrainMask, Trainable, Var, BOS};
use crate::{Error, Result};

/// Per-step diagnostics. Energy fields are batch means and are absent when
/// the perspective loss is off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub ce: f64,
    pub lp: f64,
    #[serde(rename = "E")]
    pub e: Option<PerspectiveVec>,
    pub p: Option<PerspectiveVec>,
    pub alpha: [f64; 3],
    pub e_p: Option<PerspectiveVec>,
    pub e_a: Option<PerspectiveVec>,
    pub e_t: Option<PerspectiveVec>,
}

pub fn write_step_log(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::file(path, e))?);
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PretrainOutcome {
    pub model: ModelParams,
    pub hash: String,
    /// Mean CE per epoch.
    pub epoch_ce: Vec<f64>,
    pub step_ce: Vec<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct PrefixOutcome {
    pub prefix: PrefixParams,
    pub log: Vec<StepRecord>,
}

fn diverged(step: usize, loss: f64) -> Error {
    Error::Diverged { step, loss }
}

fn map_nonfinite(step: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite(_) => diverged(step, f64::NAN),
        other => other,
    }
}

fn batches(n: usize, spec: &OptimSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    if spec.batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be positive".into()));
    }
    let mut out = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..spec.epochs {
        order.shuffle(rng);
        out.extend(order.chunks(spec.batch_size).map(|c| c.to_vec()));
    }
    if let Some(m) = spec.max_steps {
        out.truncate(m);
    }
    Ok(out)
}

/// Trains every base parameter with cross-entropy only, on prompts with
/// `pretrain_parts` and anchor-free targets.
pub fn pretrain_base(config: &RunConfig, data: &Prepared, seed: u64) -> Result<PretrainOutcome> {
    let mc = config.model.with_vocab(data.vocab.len());
    let train = data.threads(SplitName::Train);
    let examples = plain_examples(&train, &data.vocab, config.pretrain_parts, mc.max_len)?;
    if examples.is_empty() {
        return Err(Error::InvalidArgument("training split has no examples".into()));
    }
    let mut model = ModelParams::init(mc, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xba5e);
    let plan = batches(examples.len(), &config.pretrain, &mut rng)?;
    let per_epoch = examples.len().div_ceil(config.pretrain.batch_size);
    let mask = TrainMask::all_of(model.groups());
    let mut opt = Adam::new(AdamConfig { lr: config.pretrain.lr, ..Default::default() });
    let mut epoch_ce = Vec::new();
    let mut step_ce = Vec::with_capacity(plan.len());
    let (mut sum, mut count) = (0.0, 0usize);
    for (step, batch) in plan.iter().enumerate() {
        let mut g = Graph::new();
        let bound = BoundModel::bind(&mut g, &model, None, Trainable::Base)?;
        let mut losses = Vec::with_capacity(batch.len());
        for &i in batch {
            let ex = &examples[i];
            let mem = bound.encode(&mut g, &ex.src)?;
            let (logits, targets) = bound.teacher_forced(&mut g, mem, &ex.tgt)?;
            losses.push(g.cross_entropy(logits, &targets).map_err(map_nonfinite(step))?);
        }
        let loss = mean_of(&mut g, &losses)?;
        let value = g.value(loss).item();
        if !value.is_finite() {
            return Err(diverged(step, value));
        }
        let mut grads = g.backward(loss).map_err(map_nonfinite(step))?;
        let mut named = bound.collect_grads(&mut grads);
        clip(&mut named, config.pretrain.clip_norm);
        opt.step(model.groups_mut(), &mask, &named).map_err(map_nonfinite(step))?;
        step_ce.push(value);
        sum += value;
        count += 1;
        if count == per_epoch || step + 1 == plan.len() {
            epoch_ce.push(sum / count as f64);
            sum = 0.0;
            count = 0;
        }
    }
    let hash = model.hash();
    Ok(PretrainOutcome { model, hash, epoch_ce, step_ce, steps: plan.len() })
}

fn clip(grads: &mut BTreeMap<String, Tensor>, max_norm: Option<f64>) {
    let Some(max) = max_norm else { return };
    let norm = grads.values().flat_map(|t| t.data()).map(|x| x * x).sum::<f64>().sqrt();
    if norm > max {
        let s = max / norm;
        for t in grads.values_mut() {
            *t = t.map(|x| x * s);
        }
    }
}

fn mean_of(g: &mut Graph, xs: &[Var]) -> Result<Var> {
    let mut acc = xs[0];
    for &x in &xs[1..] {
        acc = g.add(acc, x)?;
    }
    g.scale(acc, 1.0 / xs.len() as f64)
}

/// Soft summary rows for the perspective loss.
#[allow(clippy::too_many_arguments)]
fn soft_rows(g: &mut Graph, bound: &BoundModel, base: &ModelParams, prefix: &PrefixParams, mem: Var, ex: &Example, ce_logits: Var, source: LpSource) -> Result<Var> {
    let t = ex.tgt.len();
    let logits = match source {
        LpSource::TeacherForced => g.slice_rows(ce_logits, 0, t)?,
        LpSource::FreeRunning => {
            let mut side = Graph::new();
            let frozen = BoundModel::bind(&mut side, base, Some(prefix), Trainable::Nothing)?;
            let m = side.constant(g.value(mem).clone());
            let greedy = decode_bound(&mut side, &frozen, m, DecodeMode::Greedy, t, false)?;
            let mut input = Vec::with_capacity(t);
            input.push(BOS);
            input.extend_from_slice(&greedy.ids[..t - 1]);
            bound.decode(g, mem, &input)?
        }
    };
    g.softmax_rows(logits)
}

/// Tunes only the prefix against a frozen base. `scorer` adds the
/// perspective loss; without it training is cross-entropy only.
pub fn train_prefix(
    config: &RunConfig,
    data: &Prepared,
    base: &ModelParams,
    expected_hash: &str,
    scorer: Option<&EnergyScorer>,
    seed: u64,
) -> Result<PrefixOutcome> {
    let found = base.hash();
    if found != expected_hash {
        return Err(Error::BaseHashMismatch { expected: expected_hash.to_string(), found });
    }
    let mc = base.config.clone();
    let train = data.threads(SplitName::Train);
    let examples = prompt_examples(&train, &data.vocab, config.prompt_parts, config.placement, mc.max_len)?;
    if examples.is_empty() {
        return Err(Error::InvalidArgument("training split has no examples".into()));
    }
    let mut prefix = PrefixParams::init(&mc, config.prefix_len, config.prefix_init_std, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9ef1);
    let plan = batches(examples.len(), &config.prefix_train, &mut rng)?;
    let mask = TrainMask::all_of(prefix.groups());
    let mut opt = Adam::new(AdamConfig { lr: config.prefix_train.lr, ..Default::default() });
    let alpha = scorer.map(|s| s.weights).unwrap_or(config.energy);
    let mut log = Vec::with_capacity(plan.len());
    for (step, batch) in plan.iter().enumerate() {
        let mut g = Graph::new();
        let bound = BoundModel::bind(&mut g, base, Some(&prefix), Trainable::Prefix)?;
        let mut totals = Vec::with_capacity(batch.len());
        let (mut ce_sum, mut lp_sum) = (0.0, 0.0);
        let mut energy: Option<[PerspectiveVec; 5]> = None;
        for &i in batch {
            let ex = &examples[i];
            let mem = bound.encode(&mut g, &ex.src)?;
            let (logits, targets) = bound.teacher_forced(&mut g, mem, &ex.tgt)?;
            let ce = g.cross_entropy(logits, &targets).map_err(map_nonfinite(step))?;
            ce_sum += g.value(ce).item();
            let Some(scorer) = scorer else {
                totals.push(ce);
                continue;
            };
            let q = soft_rows(&mut g, &bound, base, &prefix, mem, ex, logits, config.lp_source)?;
            let soft = scorer.soft(&mut g, q).map_err(map_nonfinite(step))?;
            let lp = soft.loss(&mut g, ex.perspective).map_err(map_nonfinite(step))?;
            lp_sum += g.value(lp).item();
            let b = soft.breakdown(&g);
            let acc = energy.get_or_insert([[0.0; 5]; 5]);
            for (slot, v) in acc.iter_mut().zip([b.e_combined, b.p, b.e_p, b.e_a, b.e_t]) {
                for k in 0..5 {
                    slot[k] += v[k] / batch.len() as f64;
                }
            }
            totals.push(g.add(ce, lp)?);
        }
        let loss = mean_of(&mut g, &totals)?;
        let value = g.value(loss).item();
        if !value.is_finite() {
            return Err(diverged(step, value));
        }
        let mut grads = g.backward(loss).map_err(map_nonfinite(step))?;
        let mut named = bound.collect_grads(&mut grads);
        clip(&mut named, config.prefix_train.clip_norm);
        opt.step(prefix.groups_mut(), &mask, &named).map_err(map_nonfinite(step))?;
        let n = batch.len() as f64;
        log.push(StepRecord {
            step,
            ce: ce_sum / n,
            lp: lp_sum / n,
            e: energy.map(|e| e[0]),
            p: energy.map(|e| e[1]),
            alpha: [alpha.alpha1, alpha.alpha2, alpha.alpha3],
            e_p: energy.map(|e| e[2]),
            e_a: energy.map(|e| e[3]),
            e_t: energy.map(|e| e[4]),
        });
    }
    let after = base.hash();
    if after != expected_hash {
        return Err(Error::BaseHashMismatch { expected: expected_hash.to_string(), found: after });
    }
    Ok(PrefixOutcome { prefix, log })
}
