use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, PerspectiveLabel};
use crate::energy::{EnergyBreakdown, EnergyScorer};
use crate::metrics::tokenize_eval;
use crate::nnkit::Vocab;
use crate::Result;

/// An externally produced summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub thread_id: String,
    pub perspective: PerspectiveLabel,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    /// 1-based input line.
    pub line: usize,
    #[serde(flatten)]
    pub candidate: Candidate,
    /// Combined energy for the scored perspective.
    pub energy: f64,
    pub breakdown: EnergyBreakdown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RerankDiagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RerankOutcome {
    pub ranked: Vec<RankedCandidate>,
    pub diagnostics: Vec<RerankDiagnostic>,
}

/// Candidates tagged with their 1-based input line.
pub type NumberedCandidates = Vec<(usize, Candidate)>;

/// Reads candidate JSONL. Blank lines are ignored; malformed lines become
/// diagnostics.
pub fn read_candidates<R: BufRead>(reader: R) -> Result<(NumberedCandidates, Vec<RerankDiagnostic>)> {
    let mut out = Vec::new();
    let mut diags = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Candidate>(&line) {
            Ok(c) => out.push((i + 1, c)),
            Err(e) => diags.push(RerankDiagnostic { line: i + 1, message: e.to_string() }),
        }
    }
    Ok((out, diags))
}

/// Scores candidates by combined energy, highest first; ties keep input
/// order. `perspective` overrides each record's own label when set.
pub fn rerank(
    candidates: &[(usize, Candidate)],
    dataset: &Dataset,
    scorer: &EnergyScorer,
    vocab: &Vocab,
    perspective: Option<PerspectiveLabel>,
) -> Result<RerankOutcome> {
    let mut out = RerankOutcome::default();
    for (line, c) in candidates {
        if dataset.get(&c.thread_id).is_none() {
            out.diagnostics.push(RerankDiagnostic {
                line: *line,
                message: format!("unknown thread id `{}`", c.thread_id),
            });
            continue;
        }
        let ids = vocab.encode_tokens(&tokenize_eval(&c.text));
        if ids.is_empty() {
            out.diagnostics.push(RerankDiagnostic { line: *line, message: "empty candidate text".into() });
            continue;
        }
        let label = perspective.unwrap_or(c.perspective);
        let breakdown = scorer.breakdown(&ids, vocab)?;
        out.ranked.push(RankedCandidate {
            line: *line,
            candidate: c.clone(),
            energy: breakdown.e_combined[label.index()],
            breakdown,
        });
    }
    out.ranked.sort_by(|a, b| b.energy.total_cmp(&a.energy));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Thread, PerspectiveLabel::Suggestion};
    use crate::energy::{AnchorScore, EnergyWeights, PerspectiveClassifier, ToneLexicon};
    use crate::nnkit::build_vocab;
    use std::collections::BTreeMap;

    fn setup() -> (Dataset, EnergyScorer, Vocab) {
        let t = Thread {
            id: "t1".into(),
            question: "q".into(),
            category: "c".into(),
            answers: vec!["a".into()],
            spans: vec![],
            summaries: BTreeMap::new(),
        };
        let lex = ToneLexicon::bundled();
        let mut texts = vec!["it is suggested for information purposes some of the causes in user's experience it is inquired rest more water".to_string()];
        texts.extend(lex.all_words().map(String::from));
        let vocab = build_vocab(&texts, 1000).unwrap();
        let clf = PerspectiveClassifier::zeros(vocab.len(), 4);
        let scorer = EnergyScorer::new(clf, &lex, &vocab, EnergyWeights::default(), AnchorScore::F1).unwrap();
        (Dataset::new(vec![t]), scorer, vocab)
    }

    fn cand(text: &str) -> Candidate {
        Candidate { thread_id: "t1".into(), perspective: Suggestion, text: text.into() }
    }

    #[test]
    fn anchored_candidate_ranks_first() {
        let (d, s, v) = setup();
        let cands = vec![(1, cand("rest more water")), (2, cand("it is suggested rest more water"))];
        let r = rerank(&cands, &d, &s, &v, None).unwrap();
        assert_eq!(r.ranked[0].line, 2);
        assert!(r.ranked[0].energy > r.ranked[1].energy);
    }

    #[test]
    fn ties_keep_input_order() {
        let (d, s, v) = setup();
        let cands = vec![(1, cand("rest more")), (2, cand("rest more")), (3, cand("rest more"))];
        let r = rerank(&cands, &d, &s, &v, Some(Suggestion)).unwrap();
        let lines: Vec<usize> = r.ranked.iter().map(|c| c.line).collect();
        assert_eq!(lines, [1, 2, 3]);
        assert_eq!(r.ranked[0].energy, r.ranked[2].energy);
    }

    #[test]
    fn empty_input_and_unknown_ids() {
        let (d, s, v) = setup();
        let (cands, diags) = read_candidates("".as_bytes()).unwrap();
        assert!(cands.is_empty() && diags.is_empty());
        assert!(rerank(&cands, &d, &s, &v, None).unwrap().ranked.is_empty());

        let text = "{\"thread_id\":\"nope\",\"perspective\":\"SUGGESTION\",\"text\":\"x\"}\nnot json\n";
        let (cands, diags) = read_candidates(text.as_bytes()).unwrap();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].line, 2);
        let r = rerank(&cands, &d, &s, &v, None).unwrap();
        assert!(r.ranked.is_empty());
        assert_eq!(r.diagnostics[0].line, 1);
    }
}
