use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use plasma::corpus::{
    compute_stats, corpus_agreement, import_puma_reader, read_corpus_file, split_dataset, synthesize_corpus,
    write_corpus_file, Dataset, SplitAssignment, SynthConfig,
};
use plasma::metrics::HashEmbedder;

/// Corpus tools: validation, statistics, agreement and synthetic data.
#[derive(Parser)]
#[command(name = "corpus", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Checks a corpus file and prints every diagnostic.
    Validate { file: PathBuf },
    /// Per-split, per-perspective span and summary counts.
    Stats {
        file: PathBuf,
        #[arg(long)]
        splits: Option<PathBuf>,
        /// Print JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Agreement between two annotations of the same threads.
    Agreement { a: PathBuf, b: PathBuf },
    /// Writes a synthetic corpus.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write an 80/10/10 split file here.
        #[arg(long)]
        splits_out: Option<PathBuf>,
    },
    /// Converts a PUMA-style JSON array into corpus JSONL.
    ImportPuma {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_clean(path: &PathBuf) -> Result<Dataset> {
    let outcome = read_corpus_file(path)?;
    if let Some(d) = outcome.errors().next() {
        bail!("{}: {d}", path.display());
    }
    Ok(outcome.dataset)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Validate { file } => {
            let outcome = read_corpus_file(&file)?;
            for d in &outcome.diagnostics {
                println!("{d}");
            }
            let errors = outcome.errors().count();
            println!(
                "{}: {} threads, {} errors, {} warnings",
                file.display(),
                outcome.dataset.threads.len(),
                errors,
                outcome.diagnostics.len() - errors
            );
            return Ok(if errors == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
        Cmd::Stats { file, splits, json } => {
            let data = load_clean(&file)?;
            let splits = splits.map(SplitAssignment::load).transpose()?;
            let stats = compute_stats(&data, splits.as_ref())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&stats)?);
            } else {
                print!("{}", stats.render_table());
            }
        }
        Cmd::Agreement { a, b } => {
            let (a, b) = (load_clean(&a)?, load_clean(&b)?);
            let r = corpus_agreement(&a, &b, &HashEmbedder::default())?;
            println!("{}", serde_json::to_string_pretty(&r)?);
        }
        Cmd::Synth { n, seed, out, splits_out } => {
            let data = synthesize_corpus(&SynthConfig::with_threads(n), seed)?;
            write_corpus_file(&data, &out)?;
            if let Some(p) = splits_out {
                let s = split_dataset(&data, (0.8, 0.1, 0.1), seed)?;
                std::fs::write(&p, s.to_json_string()? + "\n").with_context(|| format!("writing {}", p.display()))?;
            }
            eprintln!("wrote {} threads to {}", data.threads.len(), out.display());
        }
        Cmd::ImportPuma { input, out } => {
            let f = std::fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let data = import_puma_reader(std::io::BufReader::new(f))?;
            write_corpus_file(&data, &out)?;
            eprintln!("imported {} threads", data.threads.len());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
