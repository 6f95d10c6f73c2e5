//! Acceptance suite: one PASS/FAIL line per criterion. Runs every
//! criterion whose name contains the first free argument, if any.

mod common;

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::{published_corpus, PUBLISHED_SPLITS, PUBLISHED_TOTAL};
use plasma::corpus::{synthesize_corpus, write_corpus_file, CorpusStats, PerspectiveLabel, SplitName, SynthConfig};
use plasma::energy::{
    energy_softmax, span_examples, train_classifier, ClassifierConfig, EnergyScorer, EnergyWeights, PerspectiveClassifier,
    ToneLexicon,
};
use plasma::harness::{prepare, pretrain_base, run_ablation_with, train_prefix, AblationReport, AblationSpec, ModelSpec, OptimSpec, RunConfig};
use plasma::metrics::{bleu, rouge_l, rouge_n};
use plasma::nnkit::gradcheck::{check_gradients, check_named};
use plasma::nnkit::{
    build_vocab, decode_bound, file_sha256, BoundModel, DecodeMode, Graph, ModelConfig, ModelParams, PrefixParams, Tensor, Trainable, Var,
    BOS, PAD,
};
use plasma::prompt::{build_prompt, parse_prompt, Placement, PromptSpec, Section};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BLEU_TOL: f64 = 1e-4;
const SOFTMAX_UNIFORM_TOL: f64 = 1e-12;
const SOFTMAX_POINT_TOL: f64 = 1e-4;
const SOFTMAX_SUM_TOL: f64 = 1e-12;
const GRAD_H: f64 = 1e-5;
const GRAD_REL_TOL: f64 = 1e-4;
const ANCHOR_FULL_MIN: f64 = 0.80;
const ANCHOR_NO_LP_MAX: f64 = 0.40;
const CLASSIFIER_MIN_ACC: f64 = 0.95;
const UNIFORM_TOL: f64 = 1e-12;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// criterion 1

fn dataset_statistics() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let (data, splits) = published_corpus();
    write_corpus_file(&data, dir.path().join("puma.jsonl")).unwrap();
    std::fs::write(dir.path().join("splits.json"), splits.to_json_string().unwrap()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_corpus"))
        .args(["stats", "puma.jsonl", "--splits", "splits.json", "--json"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    if !out.status.success() {
        return verdict(false, String::from_utf8_lossy(&out.stderr));
    }
    let stats: CorpusStats = serde_json::from_slice(&out.stdout).unwrap();
    let mut bad = Vec::new();
    for (split, n, labels) in PUBLISHED_SPLITS {
        let s = &stats.splits[&split];
        if s.threads != n {
            bad.push(format!("{split}: {} threads, want {n}", s.threads));
        }
        for (l, spans, summaries) in labels {
            let c = s.perspectives.get(l);
            if (c.spans, c.summaries) != (spans, summaries) {
                bad.push(format!("{split} {l}: {}/{}, want {spans}/{summaries}", c.spans, c.summaries));
            }
        }
    }
    if stats.total.threads != 3167 {
        bad.push(format!("total threads {}", stats.total.threads));
    }
    for (l, spans, summaries) in PUBLISHED_TOTAL {
        let c = stats.total.perspectives.get(l);
        if (c.spans, c.summaries) != (spans, summaries) {
            bad.push(format!("total {l}: {}/{}, want {spans}/{summaries}", c.spans, c.summaries));
        }
    }
    let shown = format!("3167 threads (2533/317/317), {} label cells checked", 5 * 4);
    if bad.is_empty() {
        verdict(true, shown)
    } else {
        verdict(false, bad.join("; "))
    }
}

// criterion 2

fn oracle_ngrams(t: &[String], n: usize) -> Vec<Vec<String>> {
    if t.len() < n {
        return Vec::new();
    }
    (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
}

/// Clipped overlap by pairing each candidate n-gram with an unused equal
/// reference n-gram.
fn oracle_rouge_n(c: &[String], r: &[String], n: usize) -> (f64, f64) {
    let cg = oracle_ngrams(c, n);
    let rg = oracle_ngrams(r, n);
    let mut used = vec![false; rg.len()];
    let mut overlap = 0usize;
    for g in &cg {
        if let Some(j) = (0..rg.len()).find(|&j| !used[j] && rg[j] == *g) {
            used[j] = true;
            overlap += 1;
        }
    }
    if cg.is_empty() || rg.is_empty() {
        return (0.0, 0.0);
    }
    (overlap as f64 / rg.len() as f64, overlap as f64 / cg.len() as f64)
}

fn is_subsequence(sub: &[&String], of: &[String]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|x| it.any(|y| y == *x))
}

/// Longest common subsequence by enumerating every subset of `a`.
fn oracle_lcs(a: &[String], b: &[String]) -> usize {
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let sub: Vec<&String> = (0..a.len()).filter(|i| mask >> i & 1 == 1).map(|i| &a[i]).collect();
        if sub.len() > best && is_subsequence(&sub, b) {
            best = sub.len();
        }
    }
    best
}

fn metric_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let words = ["a", "b", "c", "d", "the", "cat"];
    let sample = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let n = rng.gen_range(0..=8);
        (0..n).map(|_| words[rng.gen_range(0..words.len())].to_string()).collect()
    };
    let mut mismatches = 0;
    for _ in 0..200 {
        let (c, r) = (sample(&mut rng), sample(&mut rng));
        for n in [1, 2] {
            let got = rouge_n(&c, &r, n);
            let (recall, precision) = oracle_rouge_n(&c, &r, n);
            if got.recall != recall || got.precision != precision {
                mismatches += 1;
            }
        }
        let l = oracle_lcs(&c, &r) as f64;
        let got = rouge_l(&c, &r);
        let want = if c.is_empty() || r.is_empty() { (0.0, 0.0) } else { (l / r.len() as f64, l / c.len() as f64) };
        if (got.recall, got.precision) != want {
            mismatches += 1;
        }
    }
    let toks = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
    let same = toks("it is suggested to rest");
    let b_same = bleu(&same, &[&same[..]], 4);
    let (cand, reference) = (toks("the cat"), toks("the cat sat"));
    let b_cat = bleu(&cand, &[&reference[..]], 4);
    let pass = mismatches == 0 && (b_same - 1.0).abs() < BLEU_TOL && (b_cat - 0.6065).abs() < BLEU_TOL;
    verdict(pass, format!("200 pairs, {mismatches} oracle mismatches; BLEU identical {b_same:.4}, the cat/the cat sat {b_cat:.4}"))
}

// criterion 3

fn energy_formula() -> Verdict {
    let u = energy_softmax(&[1.0; 5]);
    let uniform_err = u.iter().map(|p| (p - 0.2).abs()).fold(0.0, f64::max);
    let p = energy_softmax(&[2.0, 1.0, 1.0, 1.0, 1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let e: [f64; 5] = std::array::from_fn(|_| rng.gen_range(1e-3..5.0));
        worst = worst.max((energy_softmax(&e).iter().sum::<f64>() - 1.0).abs());
    }
    let pass = uniform_err < SOFTMAX_UNIFORM_TOL && (p[0] - 0.2919).abs() < SOFTMAX_POINT_TOL && worst < SOFTMAX_SUM_TOL;
    verdict(pass, format!("uniform err {uniform_err:.1e}, p0(2,1,1,1,1) {:.4}, worst sum err {worst:.1e}", p[0]))
}

// criterion 4

fn rnd(shape: &[usize], seed: u64) -> Tensor {
    Tensor::randn(shape, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn weighted_sum(g: &mut Graph, x: Var) -> plasma::Result<Var> {
    let shape = g.value(x).shape().to_vec();
    let w = g.constant(rnd(&shape, 999));
    let p = g.mul(x, w)?;
    g.sum(p)
}

type OpCase = (&'static str, Vec<Tensor>, Box<dyn Fn(&mut Graph, &[Var]) -> plasma::Result<Var>>);

fn op_cases() -> Vec<OpCase> {
    let pos = |shape: &[usize], seed| rnd(shape, seed).map(|x| 0.5 + x.abs());
    let kinked = Tensor::new(vec![2, 3], vec![0.3, 2.0, -1.0, 1.4, 0.1, 0.9]).unwrap();
    let mask: Vec<bool> = (0..15).map(|k| k % 5 <= k / 5 + 1).collect();
    macro_rules! unary {
        ($name:expr, $input:expr, |$g:ident, $x:ident| $body:expr) => {
            ($name, vec![$input], Box::new(move |$g: &mut Graph, v: &[Var]| {
                let $x = v[0];
                let y = $body?;
                weighted_sum($g, y)
            }) as Box<dyn Fn(&mut Graph, &[Var]) -> plasma::Result<Var>>)
        };
    }
    macro_rules! binary {
        ($name:expr, $a:expr, $b:expr, |$g:ident, $x:ident, $y:ident| $body:expr) => {
            ($name, vec![$a, $b], Box::new(move |$g: &mut Graph, v: &[Var]| {
                let ($x, $y) = (v[0], v[1]);
                let out = $body?;
                weighted_sum($g, out)
            }) as Box<dyn Fn(&mut Graph, &[Var]) -> plasma::Result<Var>>)
        };
    }
    vec![
        binary!("matmul", rnd(&[3, 4], 1), rnd(&[4, 2], 2), |g, a, b| g.matmul(a, b)),
        binary!("matmul_t", rnd(&[3, 4], 1), rnd(&[5, 4], 2), |g, a, b| g.matmul_t(a, b)),
        unary!("transpose", rnd(&[3, 4], 3), |g, x| g.transpose(x)),
        binary!("add", rnd(&[2, 3], 4), rnd(&[2, 3], 5), |g, a, b| g.add(a, b)),
        binary!("sub", rnd(&[2, 3], 4), rnd(&[2, 3], 5), |g, a, b| g.sub(a, b)),
        binary!("mul", rnd(&[2, 3], 4), rnd(&[2, 3], 5), |g, a, b| g.mul(a, b)),
        binary!("add_row", rnd(&[3, 4], 6), rnd(&[4], 7), |g, a, b| g.add_row(a, b)),
        unary!("scale", rnd(&[2, 2], 8), |g, x| g.scale(x, -1.7)),
        unary!("gelu", rnd(&[3, 3], 9), |g, x| g.gelu(x)),
        unary!("exp", rnd(&[2, 3], 10), |g, x| g.exp(x)),
        unary!("log", pos(&[2, 3], 11), |g, x| g.log(x)),
        unary!("recip", pos(&[2, 3], 12), |g, x| g.recip(x)),
        unary!("softmax_rows", rnd(&[3, 5], 13), |g, x| g.softmax_rows(x)),
        unary!("masked_softmax_rows", rnd(&[3, 5], 14), |g, x| g.masked_softmax_rows(x, Some(&mask))),
        (
            "layer_norm_rows",
            vec![rnd(&[3, 6], 15), rnd(&[6], 16), rnd(&[6], 17)],
            Box::new(|g: &mut Graph, v: &[Var]| {
                let y = g.layer_norm_rows(v[0], v[1], v[2])?;
                weighted_sum(g, y)
            }),
        ),
        ("cross_entropy", vec![rnd(&[4, 6], 18)], Box::new(|g: &mut Graph, v: &[Var]| g.cross_entropy(v[0], &[4, PAD, 1, 5]))),
        unary!("embedding", rnd(&[6, 3], 19), |g, x| g.embedding(x, &[1, 4, 1, 0])),
        binary!("concat_rows", rnd(&[2, 3], 20), rnd(&[1, 3], 21), |g, a, b| g.concat_rows(&[a, b, a])),
        binary!("concat_cols", rnd(&[2, 3], 22), rnd(&[2, 1], 23), |g, a, b| g.concat_cols(&[a, b])),
        unary!("slice_rows", rnd(&[4, 3], 24), |g, x| g.slice_rows(x, 1, 3)),
        unary!("slice_cols", rnd(&[3, 5], 25), |g, x| g.slice_cols(x, 1, 4)),
        unary!("select_cols", rnd(&[3, 5], 26), |g, x| g.select_cols(x, &[4, 0, 4])),
        ("select", vec![rnd(&[2, 3], 27)], Box::new(|g: &mut Graph, v: &[Var]| {
            let y = g.select(v[0], 4)?;
            g.mul(y, y)
        })),
        ("sum", vec![rnd(&[2, 3], 28)], Box::new(|g: &mut Graph, v: &[Var]| {
            let s = g.sum(v[0])?;
            g.mul(s, s)
        })),
        ("mean", vec![rnd(&[2, 3], 29)], Box::new(|g: &mut Graph, v: &[Var]| {
            let s = g.mean(v[0])?;
            g.mul(s, s)
        })),
        unary!("sum_rows", rnd(&[3, 4], 30), |g, x| g.sum_rows(x)),
        unary!("mean_rows", rnd(&[3, 4], 31), |g, x| g.mean_rows(x)),
        unary!("clamp_max_cols", kinked.clone(), |g, x| g.clamp_max_cols(x, &[1.0, 1.0, 0.5])),
        unary!("clamp_min", kinked, |g, x| g.clamp_min(x, 0.5)),
        ("cosine", vec![rnd(&[1, 5], 32), rnd(&[1, 5], 33)], Box::new(|g: &mut Graph, v: &[Var]| g.cosine(v[0], v[1]))),
    ]
}

/// Composed CE + perspective loss on a toy model, checked against every
/// prefix scalar, for both soft-decode sources.
fn composed_loss_error() -> f64 {
    let lex = ToneLexicon::bundled();
    let mut texts = vec![
        "it is suggested for information purposes some of the causes in user's experience it is inquired rest drink water".to_string(),
    ];
    texts.extend(lex.all_words().map(String::from));
    let vocab = build_vocab(&texts, 1000).unwrap();
    let clf = PerspectiveClassifier::init(vocab.len(), &ClassifierConfig { dim: 6, ..Default::default() }, 4);
    let scorer = EnergyScorer::new(clf, &lex, &vocab, EnergyWeights::default(), Default::default()).unwrap();
    let mc = ModelConfig { vocab_size: vocab.len(), d_model: 4, n_heads: 2, d_ff: 6, enc_layers: 1, dec_layers: 1, max_len: 32 };
    let base = ModelParams::init(mc.clone(), 7).unwrap();
    let prefix0 = PrefixParams::init(&mc, 2, 0.5, 8).unwrap();
    let src = vocab.encode("rest drink water it is");
    let tgt = vocab.encode("it is suggested rest");
    let label = PerspectiveLabel::Suggestion;
    let mut worst = 0.0f64;
    for free_running in [false, true] {
        let report = check_named(prefix0.groups(), GRAD_H, |groups, want| {
            let mut prefix = prefix0.clone();
            *prefix.groups_mut() = groups.clone();
            let mut g = Graph::new();
            let bound = BoundModel::bind(&mut g, &base, Some(&prefix), Trainable::Prefix)?;
            let mem = bound.encode(&mut g, &src)?;
            let (logits, targets) = bound.teacher_forced(&mut g, mem, &tgt)?;
            let ce = g.cross_entropy(logits, &targets)?;
            let rows = if free_running {
                let mut side = Graph::new();
                let frozen = BoundModel::bind(&mut side, &base, Some(&prefix), Trainable::Nothing)?;
                let m = side.constant(g.value(mem).clone());
                let greedy = decode_bound(&mut side, &frozen, m, DecodeMode::Greedy, tgt.len(), false)?;
                let mut input = vec![BOS];
                input.extend_from_slice(&greedy.ids[..tgt.len() - 1]);
                bound.decode(&mut g, mem, &input)?
            } else {
                g.slice_rows(logits, 0, tgt.len())?
            };
            let q = g.softmax_rows(rows)?;
            let soft = scorer.soft(&mut g, q)?;
            let lp = soft.loss(&mut g, label)?;
            let loss = g.add(ce, lp)?;
            let value = g.value(loss).item();
            let grads = if want {
                let mut gr = g.backward(loss)?;
                bound.collect_grads(&mut gr)
            } else {
                BTreeMap::new()
            };
            Ok((value, grads))
        })
        .unwrap();
        worst = worst.max(report.max_rel_err);
    }
    worst
}

fn gradient_correctness() -> Verdict {
    let mut worst = ("", 0.0f64);
    let cases = op_cases();
    let n = cases.len();
    for (name, inputs, f) in cases {
        let r = check_gradients(&inputs, GRAD_H, f).unwrap();
        if r.max_rel_err >= worst.1 {
            worst = (name, r.max_rel_err);
        }
    }
    let composed = composed_loss_error();
    let pass = worst.1 < GRAD_REL_TOL && composed < GRAD_REL_TOL;
    verdict(pass, format!("{n} ops, worst {} {:.1e}; composed CE+Lp wrt prefix {composed:.1e}", worst.0, worst.1))
}

// criteria 5-7 share one ablation run

fn acceptance_config() -> RunConfig {
    RunConfig {
        synthetic_threads: 500,
        model: ModelSpec { d_model: 32, n_heads: 2, d_ff: 64, enc_layers: 1, dec_layers: 1, max_len: 256 },
        pretrain: OptimSpec { lr: 3e-3, epochs: 100, batch_size: 8, max_steps: Some(1500), clip_norm: None },
        prefix_train: OptimSpec { lr: 1e-2, epochs: 100, batch_size: 8, max_steps: Some(1000), clip_norm: Some(1.0) },
        prefix_len: 8,
        ..Default::default()
    }
}

const NO_B: &str = "no_lp&prompt:P+D+T";

fn ablation_run() -> (AblationReport, Duration) {
    let start = Instant::now();
    let config = acceptance_config();
    let data = prepare(&config).unwrap();
    let matrix: Vec<AblationSpec> = ["full", "no_lp", "no_Ea", "no_Ep", NO_B].iter().map(|s| s.parse().unwrap()).collect();
    let report = run_ablation_with(&matrix, &config, &[1, 2, 3], &data, &mut |r| {
        let o = r.report.overall();
        println!(
            "    seed {} {:<20} ClfAcc {:.3} AnchorHit {:.3} AnchorE {:.3} ({:.0?})",
            r.seed,
            r.variant,
            o.classifier_accuracy,
            o.anchor_hit_rate,
            o.anchor_energy,
            start.elapsed()
        );
    })
    .unwrap();
    print!("{}", report.table().lines().map(|l| format!("    {l}\n")).collect::<String>());
    (report, start.elapsed())
}

fn frozen_base(report: &AblationReport) -> Verdict {
    let in_run = report.runs.iter().all(|r| r.base_hash == r.base_hash_after);
    // byte-level check of a saved checkpoint around a separate tuning run
    let config = RunConfig {
        synthetic_threads: 60,
        prefix_train: OptimSpec { max_steps: Some(20), ..acceptance_config().prefix_train },
        pretrain: OptimSpec { max_steps: Some(20), ..acceptance_config().pretrain },
        ..acceptance_config()
    };
    let data = prepare(&config).unwrap();
    let base = pretrain_base(&config, &data, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("base.ckpt");
    base.model.to_checkpoint(serde_json::Value::Null).unwrap().save(&path).unwrap();
    let before = file_sha256(&path).unwrap();
    let spans = span_examples(&data.threads(SplitName::Train), &data.vocab);
    let clf = train_classifier(&spans, data.vocab.len(), &config.classifier, 1).unwrap();
    let scorer = EnergyScorer::new(clf, &data.lexicon, &data.vocab, config.energy, config.anchor_score).unwrap();
    train_prefix(&config, &data, &base.model, &base.hash, Some(&scorer), 1).unwrap();
    base.model.to_checkpoint(serde_json::Value::Null).unwrap().save(&path).unwrap();
    let after = file_sha256(&path).unwrap();
    verdict(
        in_run && before == after,
        format!("{} ablation runs hash-stable: {in_run}; checkpoint file sha256 stable: {}", report.runs.len(), before == after),
    )
}

fn directional_ablation(report: &AblationReport, elapsed: Duration) -> Verdict {
    let v = |id: &str| report.variant(id).unwrap();
    let (full, no_lp, no_ea, no_ep) = (v("full"), v("no_lp"), v("no_Ea"), v("no_Ep"));
    let checks = [
        ("ClfAcc full>no_lp", full.classifier_accuracy.mean, no_lp.classifier_accuracy.mean),
        ("AnchorE full>no_lp", full.anchor_energy.mean, no_lp.anchor_energy.mean),
        ("AnchorHit full>no_Ea", full.anchor_hit_rate.mean, no_ea.anchor_hit_rate.mean),
        ("ClfAcc full>no_Ep", full.classifier_accuracy.mean, no_ep.classifier_accuracy.mean),
    ];
    let mut pass = elapsed < Duration::from_secs(20 * 60);
    let mut parts = Vec::new();
    for (name, a, b) in checks {
        let ok = a > b;
        pass &= ok;
        parts.push(format!("{name} {a:.3} vs {b:.3} {}", if ok { "ok" } else { "NOT MET" }));
    }
    parts.push(format!("{:.0?} for 5 variants x 3 seeds", elapsed));
    verdict(pass, parts.join("; "))
}

fn suggestion_hit(report: &AblationReport, id: &str) -> f64 {
    let s = report.variant(id).unwrap();
    s.rows.iter().find(|r| r.scope == "SUGGESTION").map(|r| r.anchor_hit_rate).unwrap_or(0.0)
}

fn anchor_compliance(report: &AblationReport) -> Verdict {
    let full = suggestion_hit(report, "full");
    let no_b = suggestion_hit(report, NO_B);
    verdict(
        full >= ANCHOR_FULL_MIN && no_b <= ANCHOR_NO_LP_MAX,
        format!("SUGGESTION anchor hit: full {full:.3} (need >= {ANCHOR_FULL_MIN}), {NO_B} {no_b:.3} (need <= {ANCHOR_NO_LP_MAX})"),
    )
}

// criterion 8

fn prompt_plumbing() -> Verdict {
    let data = synthesize_corpus(&SynthConfig::with_threads(40), 8).unwrap();
    let variants: Vec<AblationSpec> = plasma::harness::standard_matrix().into_iter().filter(|s| s.id() != "full").collect();
    let mut checked = 0;
    let mut failures = Vec::new();
    for spec in &variants {
        let c = spec.apply(&RunConfig::default()).unwrap();
        let mut content = vec![Section::Question, Section::Content];
        let mut want = c.prompt_parts.sections();
        match c.placement {
            Placement::Before => want.append(&mut content),
            Placement::After => {
                content.append(&mut want);
                want = content;
            }
        }
        for t in data.threads.iter().step_by(2).take(20) {
            for l in PerspectiveLabel::ALL {
                let text = build_prompt(&PromptSpec { thread: t, perspective: l, placement: c.placement, parts: c.prompt_parts }).unwrap();
                let parsed = parse_prompt(&text).unwrap();
                let got: Vec<Section> = parsed.iter().map(|(s, _)| *s).collect();
                let question_ok = parsed.iter().any(|(s, b)| *s == Section::Question && *b == t.question.split_whitespace().collect::<Vec<_>>().join(" "));
                checked += 1;
                if got != want || !question_ok {
                    failures.push(format!("{} {} {l}", spec.id(), t.id));
                }
            }
        }
    }
    verdict(
        failures.is_empty() && variants.len() == 10,
        format!("{} variants x 20 threads x 5 perspectives = {checked} prompts, {} mismatches", variants.len(), failures.len()),
    )
}

// criterion 9

fn classifier_quality() -> Verdict {
    let config = RunConfig::default();
    let data = prepare(&config).unwrap();
    let train = span_examples(&data.threads(SplitName::Train), &data.vocab);
    let held_out = span_examples(&data.threads(SplitName::Test), &data.vocab);
    let clf = train_classifier(&train, data.vocab.len(), &config.classifier, 1).unwrap();
    let acc = clf.accuracy(&held_out).unwrap();
    let zero = PerspectiveClassifier::zeros(data.vocab.len(), config.classifier.dim);
    let mut worst = 0.0f64;
    for (ids, _) in held_out.iter().take(50) {
        let p = zero.predict(ids).unwrap();
        worst = worst.max(p.iter().map(|x| (x - 0.2).abs()).fold(0.0, f64::max));
    }
    verdict(
        acc >= CLASSIFIER_MIN_ACC && worst < UNIFORM_TOL,
        format!("held-out accuracy {acc:.4} on {} spans; zero-init max deviation from uniform {worst:.1e}", held_out.len()),
    )
}

fn main() -> ExitCode {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let wanted = |name: &str| filter.as_deref().is_none_or(|f| name.contains(f));
    let mut results: Vec<(usize, &str, Verdict, Duration)> = Vec::new();
    let mut timed = |n: usize, name: &'static str, f: &mut dyn FnMut() -> Verdict, budget: Option<Duration>| {
        if !wanted(name) {
            return;
        }
        let start = Instant::now();
        let mut v = f();
        let took = start.elapsed();
        if let Some(b) = budget {
            if took > b {
                v.pass = false;
                v.detail.push_str(&format!("; over the {b:?} budget"));
            }
        }
        println!("criterion {n} {name}: {} ({}) [{took:.1?}]", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, name, v, took));
    };
    timed(1, "dataset_statistics", &mut dataset_statistics, Some(Duration::from_secs(10)));
    timed(2, "metric_oracles", &mut metric_oracles, Some(Duration::from_secs(5)));
    timed(3, "energy_formula", &mut energy_formula, Some(Duration::from_secs(1)));
    timed(4, "gradient_correctness", &mut gradient_correctness, Some(Duration::from_secs(60)));
    let needs_run = ["frozen_base", "directional_ablation", "anchor_compliance"].iter().any(|n| wanted(n));
    if needs_run {
        let (report, elapsed) = ablation_run();
        timed(5, "frozen_base", &mut || frozen_base(&report), None);
        timed(6, "directional_ablation", &mut || directional_ablation(&report, elapsed), None);
        timed(7, "anchor_compliance", &mut || anchor_compliance(&report), None);
    }
    timed(8, "prompt_plumbing", &mut prompt_plumbing, Some(Duration::from_secs(10)));
    timed(9, "classifier_quality", &mut classifier_quality, Some(Duration::from_secs(120)));
    let failed: Vec<String> = results.iter().filter(|r| !r.2.pass).map(|r| format!("{} {}", r.0, r.1)).collect();
    println!("acceptance: {} of {} criteria pass", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
