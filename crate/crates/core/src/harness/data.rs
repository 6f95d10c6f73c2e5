use super::config::RunConfig;
use crate::corpus::{read_corpus_file, split_dataset, synthesize_corpus, Dataset, PerspectiveLabel, SplitAssignment, SplitName, SynthConfig, Thread};
use crate::energy::ToneLexicon;
use crate::metrics::tokenize_eval;
use crate::nnkit::{build_vocab, Vocab};
use crate::prompt::{build_prompt, profile_for, strip_anchor, Placement, PromptParts, PromptSpec};
use crate::{Error, Result};

/// Corpus, split, vocabulary and lexicon for one run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    pub splits: SplitAssignment,
    pub vocab: Vocab,
    pub lexicon: ToneLexicon,
}

impl Prepared {
    pub fn threads(&self, split: SplitName) -> Vec<&Thread> {
        self.dataset.subset(&self.splits, split)
    }
}

pub fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    match &config.corpus {
        Some(path) => {
            let outcome = read_corpus_file(path)?;
            if let Some(d) = outcome.errors().next() {
                return Err(Error::Data(format!("{}: {d}", path.display())));
            }
            Ok(outcome.dataset)
        }
        None => synthesize_corpus(&SynthConfig::with_threads(config.synthetic_threads), config.synthetic_seed),
    }
}

/// Loads data and builds the vocabulary from the training split, the
/// prompt template text, anchors and lexicon words.
pub fn prepare(config: &RunConfig) -> Result<Prepared> {
    let dataset = load_dataset(config)?;
    let splits = match &config.splits {
        Some(p) => SplitAssignment::load(p)?,
        None => split_dataset(&dataset, config.split_ratios, config.split_seed)?,
    };
    let lexicon = match &config.lexicon {
        Some(p) => ToneLexicon::load(p)?,
        None => ToneLexicon::bundled(),
    };
    let train = dataset.subset(&splits, SplitName::Train);
    let first = train
        .first()
        .ok_or_else(|| Error::InvalidArgument("training split is empty".into()))?;
    let mut texts: Vec<String> = Vec::new();
    for t in &train {
        texts.push(t.question.clone());
        texts.extend(t.answers.iter().cloned());
        texts.extend(t.summaries.values().cloned());
    }
    for l in PerspectiveLabel::ALL {
        // template words, definitions, anchors and tone labels
        texts.push(build_prompt(&PromptSpec::new(first, l))?);
        texts.push(profile_for(l).anchor_text.to_string());
    }
    texts.extend(lexicon.all_words().map(String::from));
    let vocab = build_vocab(&texts, config.vocab_size)?;
    Ok(Prepared { dataset, splits, vocab, lexicon })
}

/// One (thread, gold perspective) training or evaluation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub thread_id: String,
    pub perspective: PerspectiveLabel,
    pub src: Vec<usize>,
    pub tgt: Vec<usize>,
}

fn clip(mut ids: Vec<usize>, max: usize) -> Vec<usize> {
    ids.truncate(max);
    ids
}

/// Prompted examples targeting the gold summaries. Sources longer than
/// `max_len` are truncated; targets leave room for BOS/EOS.
pub fn prompt_examples(threads: &[&Thread], vocab: &Vocab, parts: PromptParts, placement: Placement, max_len: usize) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for t in threads {
        for (&label, summary) in &t.summaries {
            let prompt = build_prompt(&PromptSpec { thread: t, perspective: label, placement, parts })?;
            let tgt = clip(vocab.encode(summary), max_len.saturating_sub(1));
            if tgt.is_empty() {
                continue;
            }
            out.push(Example {
                thread_id: t.id.clone(),
                perspective: label,
                src: clip(vocab.encode(&prompt), max_len),
                tgt,
            });
        }
    }
    Ok(out)
}

/// Base-model examples rendered with `parts`, targeting the gold summary
/// with its anchor removed, so the base never learns the anchor phrases.
pub fn plain_examples(threads: &[&Thread], vocab: &Vocab, parts: PromptParts, max_len: usize) -> Result<Vec<Example>> {
    let mut out = Vec::new();
    for t in threads {
        for (&label, summary) in &t.summaries {
            let prompt = build_prompt(&PromptSpec {
                thread: t,
                perspective: label,
                placement: Placement::Before,
                parts,
            })?;
            let src = clip(vocab.encode(&prompt), max_len);
            let toks = tokenize_eval(summary);
            let tgt = clip(vocab.encode_tokens(strip_anchor(&toks, label)), max_len.saturating_sub(1));
            if tgt.is_empty() {
                continue;
            }
            out.push(Example {
                thread_id: t.id.clone(),
                perspective: label,
                src,
                tgt,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnkit::UNK;

    fn cfg() -> RunConfig {
        RunConfig { synthetic_threads: 40, ..Default::default() }
    }

    #[test]
    fn vocabulary_covers_template_and_anchors() {
        let p = prepare(&cfg()).unwrap();
        for l in PerspectiveLabel::ALL {
            assert!(!p.vocab.encode(profile_for(l).anchor_text).contains(&UNK));
            assert!(!p.vocab.encode(profile_for(l).definition).contains(&UNK));
        }
        assert_eq!(p.splits.len(), 40);
    }

    #[test]
    fn one_example_per_gold_summary() {
        let p = prepare(&cfg()).unwrap();
        let train = p.threads(SplitName::Train);
        let n: usize = train.iter().map(|t| t.summaries.len()).sum();
        let ex = prompt_examples(&train, &p.vocab, PromptParts::FULL, Placement::Before, 512).unwrap();
        assert_eq!(ex.len(), n);
        let plain = plain_examples(&train, &p.vocab, PromptParts::NONE, 512).unwrap();
        assert_eq!(plain.len(), n);
        let anchor = p.vocab.encode("it is suggested");
        for e in plain.iter().filter(|e| e.perspective == PerspectiveLabel::Suggestion) {
            assert!(!e.tgt.starts_with(&anchor));
        }
        for e in ex.iter().filter(|e| e.perspective == PerspectiveLabel::Suggestion) {
            assert!(e.tgt.starts_with(&anchor));
        }
    }
}
