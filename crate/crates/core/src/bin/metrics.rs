use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use plasma::metrics::{score_lines, HashEmbedder};

/// Summary metrics over line-aligned candidate and reference files.
#[derive(Parser)]
#[command(name = "metrics", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scores line i of --cand against line i of --ref.
    Score {
        #[arg(long)]
        cand: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(String::from).collect())
}

fn main() -> Result<()> {
    let Cmd::Score { cand, reference, out } = Cli::parse().cmd;
    let embedder = HashEmbedder::default();
    let report = score_lines(&lines(&cand)?, &lines(&reference)?, &embedder, "hashed token vectors (dim 256)")?;
    let json = serde_json::to_string_pretty(&report)?;
    match out {
        Some(p) => std::fs::write(&p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{json}"),
    }
    let m = &report.mean;
    eprintln!(
        "n={} R1={:.4} R2={:.4} RL={:.4} BLEU={:.4} METEOR={:.4} EmbedSim={:.4}",
        report.count, m.rouge1.f1, m.rouge2.f1, m.rouge_l.f1, m.bleu, m.meteor, m.embed_sim
    );
    Ok(())
}
