use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use plasma::corpus::{PerspectiveLabel, SplitName};
use plasma::energy::{span_examples, train_classifier, EnergyScorer, PerspectiveClassifier};
use plasma::harness::{
    evaluate, load_dataset, pretrain_base, prepare, read_candidates, rerank, run_ablation_with, standard_matrix,
    train_prefix, write_step_log, AblationSpec, ModelSummarizer, Prepared, RunConfig, TableEmbedder,
};
use plasma::nnkit::{Checkpoint, ModelParams, PrefixParams, Vocab};
use serde::{Deserialize, Serialize};

/// Base pretraining, prefix tuning, evaluation, ablations and reranking.
#[derive(Parser)]
#[command(name = "plasma", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Trains the base model and the perspective classifier.
    Pretrain {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Tunes a prefix on the frozen base.
    Train {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long, default_value = "full")]
        variant: String,
    },
    /// Decodes and scores one split.
    Eval {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long, default_value = "test")]
        split: SplitName,
        #[arg(long, default_value = "full")]
        variant: String,
        /// Evaluate the bare base model without a prefix.
        #[arg(long)]
        no_prefix: bool,
    },
    /// Runs a variant matrix over several seeds.
    Ablate {
        #[arg(short, long)]
        config: PathBuf,
        /// Comma-separated variant ids; the standard matrix when absent.
        #[arg(long, value_delimiter = ',')]
        matrix: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Orders external candidates by combined energy.
    Rerank {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        perspective: Option<PerspectiveLabel>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// What `pretrain` records next to the base checkpoint.
#[derive(Serialize, Deserialize)]
struct BaseRecord {
    hash: String,
    seed: u64,
    steps: usize,
    epoch_ce: Vec<f64>,
    classifier_val_accuracy: f64,
}

fn dir_name(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}; run `plasma pretrain` first", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

struct Pretrained {
    data: Prepared,
    base: ModelParams,
    record: BaseRecord,
    classifier: PerspectiveClassifier,
}

/// Loads the pretrain artifacts and the data with the saved vocabulary.
fn load_pretrained(config: &RunConfig) -> Result<Pretrained> {
    let dir = config.out_dir.join("pretrain");
    let record: BaseRecord = read_json(&dir.join("base.json"))?;
    let vocab: Vocab = read_json(&dir.join("vocab.json"))?;
    let (base, _) = ModelParams::from_checkpoint(&Checkpoint::load(&dir.join("base.ckpt"))?)?;
    let classifier = PerspectiveClassifier::from_checkpoint(&Checkpoint::load(&dir.join("classifier.ckpt"))?)?;
    let mut data = prepare(config)?;
    data.vocab = vocab;
    Ok(Pretrained { data, base, record, classifier })
}

fn pretrain(config: &RunConfig) -> Result<()> {
    let dir = config.out_dir.join("pretrain");
    config.write_resolved(&dir)?;
    let data = prepare(config)?;
    eprintln!("vocabulary {} tokens, {} train threads", data.vocab.len(), data.threads(SplitName::Train).len());
    let out = pretrain_base(config, &data, config.seed)?;
    out.model.to_checkpoint(serde_json::json!({ "seed": config.seed }))?.save(&dir.join("base.ckpt"))?;
    let spans = span_examples(&data.threads(SplitName::Train), &data.vocab);
    let classifier = train_classifier(&spans, data.vocab.len(), &config.classifier, config.seed)?;
    classifier.to_checkpoint().save(&dir.join("classifier.ckpt"))?;
    let val_acc = classifier.accuracy(&span_examples(&data.threads(SplitName::Val), &data.vocab)).unwrap_or(f64::NAN);
    write_json(&dir.join("vocab.json"), &data.vocab)?;
    let record = BaseRecord {
        hash: out.hash.clone(),
        seed: config.seed,
        steps: out.steps,
        epoch_ce: out.epoch_ce,
        classifier_val_accuracy: val_acc,
    };
    write_json(&dir.join("base.json"), &record)?;
    println!("base {} after {} steps, final epoch CE {:.4}", record.hash, record.steps, record.epoch_ce.last().copied().unwrap_or(f64::NAN));
    println!("classifier val accuracy {val_acc:.4}");
    Ok(())
}

fn train(config: &RunConfig, variant: &str) -> Result<()> {
    let spec: AblationSpec = variant.parse()?;
    let c = spec.apply(config)?;
    let dir = config.out_dir.join(format!("train-{}", dir_name(spec.id())));
    c.write_resolved(&dir)?;
    let p = load_pretrained(&c)?;
    let scorer = if c.use_lp {
        Some(EnergyScorer::new(p.classifier.clone(), &p.data.lexicon, &p.data.vocab, c.energy, c.anchor_score)?)
    } else {
        None
    };
    let out = train_prefix(&c, &p.data, &p.base, &p.record.hash, scorer.as_ref(), c.seed)?;
    let meta = serde_json::json!({ "variant": spec.id(), "base_hash": p.record.hash, "seed": c.seed });
    out.prefix.to_checkpoint(meta).save(&dir.join("prefix.ckpt"))?;
    write_step_log(&dir.join("steps.jsonl"), &out.log)?;
    if let Some(last) = out.log.last() {
        println!("{} steps, final CE {:.4}, Lp {:.4}", out.log.len(), last.ce, last.lp);
    }
    println!("base hash unchanged: {}", p.base.hash() == p.record.hash);
    Ok(())
}

fn eval(config: &RunConfig, split: SplitName, variant: &str, no_prefix: bool) -> Result<()> {
    let spec: AblationSpec = variant.parse()?;
    let c = spec.apply(config)?;
    let tag = if no_prefix { "base".to_string() } else { dir_name(spec.id()) };
    let dir = config.out_dir.join(format!("eval-{tag}-{split}"));
    c.write_resolved(&dir)?;
    let p = load_pretrained(&c)?;
    if p.base.hash() != p.record.hash {
        bail!("base checkpoint hash {} does not match the recorded {}", p.base.hash(), p.record.hash);
    }
    let prefix = if no_prefix {
        None
    } else {
        let path = config.out_dir.join(format!("train-{}", dir_name(spec.id()))).join("prefix.ckpt");
        let ckpt = Checkpoint::load(&path).with_context(|| format!("run `plasma train --variant {variant}` first"))?;
        Some(PrefixParams::from_checkpoint(&ckpt)?.0)
    };
    let mut threads = p.data.threads(split);
    if let Some(n) = c.eval_limit {
        threads.truncate(n);
    }
    let summarizer = ModelSummarizer {
        base: &p.base,
        prefix: prefix.as_ref(),
        vocab: &p.data.vocab,
        parts: c.prompt_parts,
        placement: c.placement,
        mode: c.decode,
        max_len: c.max_summary_len,
    };
    let embedder = TableEmbedder { vocab: &p.data.vocab, table: p.base.get("embed")? };
    let report = evaluate(&summarizer, &threads, split, &p.classifier, &p.data.vocab, Some(&embedder), c.anchor_score)?;
    write_json(&dir.join("report.json"), &report)?;
    let table = report.table();
    write_text(&dir.join("table.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn ablate(config: &RunConfig, matrix: Option<Vec<String>>, seeds: Option<Vec<u64>>) -> Result<()> {
    let matrix = match matrix {
        Some(ids) => ids.iter().map(|s| s.parse()).collect::<plasma::Result<Vec<AblationSpec>>>()?,
        None => standard_matrix(),
    };
    let seeds = seeds.unwrap_or_else(|| config.seeds.clone());
    let dir = config.out_dir.join("ablate");
    config.write_resolved(&dir)?;
    let data = prepare(config)?;
    let report = run_ablation_with(&matrix, config, &seeds, &data, &mut |r| {
        let o = r.report.overall();
        eprintln!(
            "seed {} {:<24} R1 {:.4} RL {:.4} ClfAcc {:.4} Anchor {:.4}",
            r.seed, r.variant, o.metrics.rouge1.f1, o.metrics.rouge_l.f1, o.classifier_accuracy, o.anchor_hit_rate
        );
    })?;
    write_json(&dir.join("report.json"), &report)?;
    let table = report.table();
    write_text(&dir.join("table.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn rerank_cmd(config: &RunConfig, candidates: &Path, perspective: Option<PerspectiveLabel>, out: Option<&Path>) -> Result<()> {
    let dir = config.out_dir.join("pretrain");
    let vocab: Vocab = read_json(&dir.join("vocab.json"))?;
    let classifier = PerspectiveClassifier::from_checkpoint(&Checkpoint::load(&dir.join("classifier.ckpt"))?)?;
    let lexicon = match &config.lexicon {
        Some(p) => plasma::energy::ToneLexicon::load(p)?,
        None => plasma::energy::ToneLexicon::bundled(),
    };
    let dataset = load_dataset(config)?;
    let scorer = EnergyScorer::new(classifier, &lexicon, &vocab, config.energy, config.anchor_score)?;
    let f = std::fs::File::open(candidates).with_context(|| format!("opening {}", candidates.display()))?;
    let (cands, mut diags) = read_candidates(std::io::BufReader::new(f))?;
    let mut outcome = rerank(&cands, &dataset, &scorer, &vocab, perspective)?;
    diags.append(&mut outcome.diagnostics);
    diags.sort_by_key(|d| d.line);
    for d in &diags {
        eprintln!("line {}: {}", d.line, d.message);
    }
    let mut text = String::new();
    for r in &outcome.ranked {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    match out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Pretrain { config } => pretrain(&RunConfig::load(&config)?),
        Cmd::Train { config, variant } => train(&RunConfig::load(&config)?, &variant),
        Cmd::Eval { config, split, variant, no_prefix } => eval(&RunConfig::load(&config)?, split, &variant, no_prefix),
        Cmd::Ablate { config, matrix, seeds } => ablate(&RunConfig::load(&config)?, matrix, seeds),
        Cmd::Rerank { config, candidates, perspective, out } => {
            let c = match config {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig::default(),
            };
            rerank_cmd(&c, &candidates, perspective, out.as_deref())
        }
    }
}
