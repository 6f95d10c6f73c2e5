use super::{Dataset, PerspectiveLabel, SpanAnnotation, Thread};
use crate::prompt::profile_for;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

const INFORMATION_WORDS: &[&str] = &[
    "informative", "educational", "factual", "knowledge", "insight", "instructive", "symptom",
    "diagnosis", "condition", "disorder", "chronic", "gland", "tissue", "hormone", "organ", "virus",
    "infection", "scan", "bacteria", "stage",
];
const CAUSE_WORDS: &[&str] = &[
    "explanatory", "causal", "reason", "origin", "trigger", "because", "factor", "genetic",
    "exposure", "smoking", "allergen", "deficiency", "imbalance", "inflammation", "injury", "excess",
    "damage", "hereditary", "pollution", "caused",
];
const SUGGESTION_WORDS: &[&str] = &[
    "advisory", "recommending", "advice", "recommend", "advise", "guidance", "try", "consider",
    "avoid", "drink", "rest", "exercise", "consult", "doctor", "water", "sleep", "reduce", "visit",
    "limit", "walk",
];
const EXPERIENCE_WORDS: &[&str] = &[
    "personal", "narrative", "anecdote", "firsthand", "story", "lived", "i", "my", "had", "felt",
    "went", "years", "ago", "myself", "tried", "happened", "remember", "experienced", "noticed",
    "recovered",
];
const QUESTION_WORDS: &[&str] = &[
    "seeking", "understanding", "inquiry", "curious", "wonder", "clarify", "anyone", "whether",
    "unsure", "asking", "which", "wondering", "did", "mean", "explain", "ask", "query", "confused",
    "puzzled", "know",
];
const FILLER_WORDS: &[&str] = &[
    "well", "so", "also", "then", "just", "maybe", "this", "that", "very", "quite", "often", "still",
    "again", "here", "there", "yes", "ok", "thanks", "hope", "helps", "good", "luck", "anyway",
    "actually", "honestly", "sure", "overall", "basically", "probably", "definitely",
];
const TOPIC_WORDS: &[&str] = &[
    "gallstones", "headache", "acne", "asthma", "diabetes", "toothache", "insomnia", "anxiety",
    "rash", "flu", "migraine", "backache", "eczema", "arthritis", "ulcer",
];
const QUESTION_TEMPLATES: &[&str] = &[
    "need help with {a} and {b} ?",
    "dealing with {a} lately , any thoughts on {b} ?",
    "{a} keeps coming back , what about {b} ?",
    "is {a} related to {b} ?",
];
const CATEGORIES: &[&str] = &[
    "Infectious Diseases", "Women's Health", "STDs", "Mental Health", "Heart Diseases",
    "Other - Health", "Skin Conditions", "First Aid", "Diabetes", "Allergies", "Dental", "Cancer",
    "Men's Health", "Diet & Fitness", "Respiratory Diseases", "Alternative Medicine",
    "Other - Diseases",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub threads: usize,
    /// Keyword vocabulary per perspective; must be pairwise disjoint.
    pub vocabularies: BTreeMap<PerspectiveLabel, Vec<String>>,
    pub filler: Vec<String>,
    pub topics: Vec<String>,
    pub min_spans: usize,
    pub max_spans: usize,
    pub max_answers: usize,
    pub min_span_words: usize,
    pub max_span_words: usize,
    pub max_summary_words: usize,
    /// Chance that a perspective with spans also gets a gold summary.
    pub summary_probability: f64,
    /// Relative frequency of span labels, canonical order.
    pub label_weights: [f64; 5],
}

impl Default for SynthConfig {
    fn default() -> Self {
        let own = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let vocabularies = [
            (PerspectiveLabel::Information, own(INFORMATION_WORDS)),
            (PerspectiveLabel::Cause, own(CAUSE_WORDS)),
            (PerspectiveLabel::Suggestion, own(SUGGESTION_WORDS)),
            (PerspectiveLabel::Experience, own(EXPERIENCE_WORDS)),
            (PerspectiveLabel::Question, own(QUESTION_WORDS)),
        ]
        .into_iter()
        .collect();
        SynthConfig {
            threads: 100,
            vocabularies,
            filler: own(FILLER_WORDS),
            topics: own(TOPIC_WORDS),
            min_spans: 2,
            max_spans: 5,
            max_answers: 4,
            min_span_words: 3,
            max_span_words: 6,
            max_summary_words: 6,
            summary_probability: 0.7,
            label_weights: [3.0, 2.0, 3.0, 2.0, 2.0],
        }
    }
}

impl SynthConfig {
    pub fn with_threads(threads: usize) -> Self {
        SynthConfig {
            threads,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let mut owner: BTreeMap<&str, PerspectiveLabel> = BTreeMap::new();
        for l in PerspectiveLabel::ALL {
            let words = self
                .vocabularies
                .get(&l)
                .filter(|w| !w.is_empty())
                .ok_or_else(|| Error::InvalidArgument(format!("no vocabulary for {l}")))?;
            for w in words {
                if let Some(prev) = owner.insert(w.as_str(), l) {
                    if prev != l {
                        return Err(Error::InvalidArgument(format!(
                            "vocabularies of {prev} and {l} share the word `{w}`"
                        )));
                    }
                }
            }
        }
        if let Some(w) = self.filler.iter().find(|w| owner.contains_key(w.as_str())) {
            return Err(Error::InvalidArgument(format!("filler word `{w}` is also a perspective keyword")));
        }
        if self.filler.is_empty() || self.topics.is_empty() {
            return Err(Error::InvalidArgument("filler and topic lists must be nonempty".into()));
        }
        if self.min_spans == 0 || self.min_spans > self.max_spans {
            return Err(Error::InvalidArgument("need 1 <= min_spans <= max_spans".into()));
        }
        if self.min_span_words == 0 || self.min_span_words > self.max_span_words {
            return Err(Error::InvalidArgument("need 1 <= min_span_words <= max_span_words".into()));
        }
        if self.max_answers == 0 || self.max_answers > super::MAX_ANSWERS {
            return Err(Error::InvalidArgument("max_answers out of range".into()));
        }
        if !self.label_weights.iter().any(|w| *w > 0.0) || self.label_weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidArgument("label weights must be non-negative and not all zero".into()));
        }
        Ok(())
    }
}

/// Text builder that tracks code-point length for span offsets.
struct AnswerText {
    text: String,
    len: usize,
}

impl AnswerText {
    fn push(&mut self, s: &str) -> (usize, usize) {
        if !self.text.is_empty() {
            self.text.push(' ');
            self.len += 1;
        }
        let start = self.len;
        self.text.push_str(s);
        self.len += s.chars().count();
        (start, self.len)
    }
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &'a [String]) -> &'a str {
    xs[rng.gen_range(0..xs.len())].as_str()
}

/// Generates a perspective-separable corpus. Same config and seed give the
/// same bytes.
pub fn synthesize_corpus(config: &SynthConfig, seed: u64) -> Result<Dataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = rand::distributions::WeightedIndex::new(config.label_weights)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut threads = Vec::with_capacity(config.threads);
    for n in 0..config.threads {
        let a = pick(&mut rng, &config.topics).to_string();
        let b = pick(&mut rng, &config.topics).to_string();
        let template = QUESTION_TEMPLATES[rng.gen_range(0..QUESTION_TEMPLATES.len())];
        let question = template.replace("{a}", &a).replace("{b}", &b);
        let category = CATEGORIES[rng.gen_range(0..CATEGORIES.len())].to_string();

        let n_spans = rng.gen_range(config.min_spans..=config.max_spans);
        let n_answers = rng.gen_range(1..=config.max_answers.min(n_spans));
        let labels: Vec<PerspectiveLabel> = (0..n_spans)
            .map(|_| PerspectiveLabel::ALL[rng.sample(&weights)])
            .collect();
        // every answer gets at least one span
        let mut owners: Vec<usize> = (0..n_spans).map(|i| if i < n_answers { i } else { rng.gen_range(0..n_answers) }).collect();
        owners.shuffle(&mut rng);

        let mut answers: Vec<AnswerText> = (0..n_answers).map(|_| AnswerText { text: String::new(), len: 0 }).collect();
        let mut spans = Vec::with_capacity(n_spans);
        for (label, &ai) in labels.iter().zip(&owners) {
            let ans = &mut answers[ai];
            if rng.gen_bool(0.5) {
                let k = rng.gen_range(2..=4);
                let filler: Vec<&str> = (0..k).map(|_| pick(&mut rng, &config.filler)).collect();
                ans.push(&format!("{} .", filler.join(" ")));
            }
            let vocab = &config.vocabularies[label];
            let k = rng.gen_range(config.min_span_words..=config.max_span_words).min(vocab.len());
            let words: Vec<&str> = vocab.choose_multiple(&mut rng, k).map(String::as_str).collect();
            let text = words.join(" ");
            let (start, end) = ans.push(&text);
            ans.push(".");
            spans.push(SpanAnnotation {
                answer_idx: ai,
                start,
                end,
                label: *label,
                text,
            });
        }
        spans.sort_by_key(|s| (s.answer_idx, s.start));

        let present: BTreeSet<PerspectiveLabel> = spans.iter().map(|s| s.label).collect();
        let mut chosen: Vec<PerspectiveLabel> = present
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(config.summary_probability))
            .collect();
        if chosen.is_empty() {
            let all: Vec<_> = present.iter().copied().collect();
            chosen.push(all[rng.gen_range(0..all.len())]);
        }
        let mut summaries = BTreeMap::new();
        for label in chosen {
            let mut words: Vec<&str> = Vec::new();
            for s in spans.iter().filter(|s| s.label == label) {
                for w in s.text.split(' ') {
                    if !words.contains(&w) && words.len() < config.max_summary_words {
                        words.push(w);
                    }
                }
            }
            let anchor = profile_for(label).anchor_text;
            summaries.insert(label, format!("{anchor} {} .", words.join(" ")));
        }
        threads.push(Thread {
            id: format!("synth-{n:05}"),
            question,
            category,
            answers: answers.into_iter().map(|a| a.text).collect(),
            spans,
            summaries,
        });
    }
    Ok(Dataset::new(threads))
}
