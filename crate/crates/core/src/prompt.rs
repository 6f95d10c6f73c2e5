//! Perspective profiles and the canonical prompt template.
//!
//! ```text
//! TASK: Summarize the following content according to perspective: <LABEL>
//! DEFINITION: <definition>
//! BEGIN SUMMARY WITH: <anchor_text>
//! TONE: <tone_label>
//! QUESTION: <question>
//! CONTENT: <answer 1> ||| <answer 2> ||| ...
//! ```
//!
//! With [`Placement::After`] the constraint lines follow `CONTENT`. Each of
//! the four constraint lines can be omitted through [`PromptParts`].

use crate::corpus::{PerspectiveLabel, Thread};
use crate::metrics::{tokenize_eval, EvalTokens};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerspectiveProfile {
    pub label: PerspectiveLabel,
    pub definition: &'static str,
    /// Lowercased "Begin Summary With" text without the trailing ellipsis.
    pub anchor_text: &'static str,
    pub tone_label: &'static str,
    pub tone_keywords: &'static [&'static str],
}

static PROFILES: [PerspectiveProfile; 5] = [
    PerspectiveProfile {
        label: PerspectiveLabel::Information,
        definition: "Defined as knowledge about diseases, disorders, and health-related facts, providing insights into symptoms and diagnosis.",
        anchor_text: "for information purposes",
        tone_label: "Informative, Educational",
        tone_keywords: &["informative", "educational"],
    },
    PerspectiveProfile {
        label: PerspectiveLabel::Cause,
        definition: "Defined as reasons responsible for the occurrence of a particular medical condition, symptom, or disease",
        anchor_text: "some of the causes",
        tone_label: "Explanatory, Causal",
        tone_keywords: &["explanatory", "causal"],
    },
    PerspectiveProfile {
        label: PerspectiveLabel::Suggestion,
        definition: "Defined as advice or recommendations to assist users in making informed medical decisions, solving problems, or improving health issues.",
        anchor_text: "it is suggested",
        tone_label: "Advisory, Recommending",
        tone_keywords: &["advisory", "recommending"],
    },
    PerspectiveProfile {
        label: PerspectiveLabel::Experience,
        definition: "Defined as individual experiences, anecdotes, or firsthand insights related to health, medical treatments, medication usage, and coping strategies.",
        anchor_text: "in user's experience",
        tone_label: "Personal, Narrative",
        tone_keywords: &["personal", "narrative"],
    },
    PerspectiveProfile {
        label: PerspectiveLabel::Question,
        definition: "Defined as inquiry made for deeper understanding.",
        anchor_text: "it is inquired",
        tone_label: "Seeking Understanding",
        tone_keywords: &["seeking", "understanding"],
    },
];

pub fn profile_for(label: PerspectiveLabel) -> &'static PerspectiveProfile {
    &PROFILES[label.index()]
}

/// Evaluation tokens of the anchor text; `j` is their count.
pub fn anchor_tokens(label: PerspectiveLabel) -> EvalTokens {
    tokenize_eval(profile_for(label).anchor_text)
}

/// The tokens after a leading anchor, or all tokens if there is none.
pub fn strip_anchor<S: AsRef<str>>(tokens: &[S], label: PerspectiveLabel) -> &[S] {
    let anchor = anchor_tokens(label);
    let starts = tokens.len() >= anchor.len() && tokens.iter().zip(anchor.iter()).all(|(a, b)| a.as_ref() == b);
    if starts {
        &tokens[anchor.len()..]
    } else {
        tokens
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    #[default]
    Before,
    After,
}

impl FromStr for Placement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "before" => Ok(Placement::Before),
            "after" => Ok(Placement::After),
            _ => Err(Error::InvalidArgument(format!("unknown placement `{s}`"))),
        }
    }
}

/// Which constraint lines to render: (P)erspective task line,
/// (D)efinition, (B)egin-with anchor, (T)one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PromptParts {
    pub perspective: bool,
    pub definition: bool,
    pub begin: bool,
    pub tone: bool,
}

impl PromptParts {
    pub const FULL: PromptParts = PromptParts {
        perspective: true,
        definition: true,
        begin: true,
        tone: true,
    };
    pub const NONE: PromptParts = PromptParts {
        perspective: false,
        definition: false,
        begin: false,
        tone: false,
    };

    /// The prompt-part settings studied in the ablations, full first.
    pub fn ablation_set() -> Vec<PromptParts> {
        ["P,D,B,T", "P", "D", "P,D", "P,D,B", "P,D,T"]
            .iter()
            .map(|s| s.parse().expect("static part list"))
            .collect()
    }

    pub fn sections(self) -> Vec<Section> {
        let mut out = Vec::new();
        if self.perspective {
            out.push(Section::Task);
        }
        if self.definition {
            out.push(Section::Definition);
        }
        if self.begin {
            out.push(Section::BeginWith);
        }
        if self.tone {
            out.push(Section::Tone);
        }
        out
    }
}

impl Default for PromptParts {
    fn default() -> Self {
        PromptParts::FULL
    }
}

impl FromStr for PromptParts {
    type Err = Error;

    /// Accepts letters separated by `,` or `+`, e.g. `P,D,B,T` or `P+D+T`.
    fn from_str(s: &str) -> Result<Self> {
        let mut p = PromptParts::NONE;
        for part in s.split([',', '+']).map(str::trim).filter(|x| !x.is_empty()) {
            match part.to_ascii_uppercase().as_str() {
                "P" => p.perspective = true,
                "D" => p.definition = true,
                "B" => p.begin = true,
                "T" => p.tone = true,
                other => return Err(Error::InvalidArgument(format!("unknown prompt part `{other}`"))),
            }
        }
        Ok(p)
    }
}

impl fmt::Display for PromptParts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut v = Vec::new();
        for (on, c) in [(self.perspective, "P"), (self.definition, "D"), (self.begin, "B"), (self.tone, "T")] {
            if on {
                v.push(c);
            }
        }
        f.write_str(&v.join("+"))
    }
}

impl Serialize for PromptParts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PromptParts {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One labelled line of a rendered prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Section {
    Task,
    Definition,
    BeginWith,
    Tone,
    Question,
    Content,
}

impl Section {
    pub fn header(self) -> &'static str {
        match self {
            Section::Task => "TASK",
            Section::Definition => "DEFINITION",
            Section::BeginWith => "BEGIN SUMMARY WITH",
            Section::Tone => "TONE",
            Section::Question => "QUESTION",
            Section::Content => "CONTENT",
        }
    }

    pub fn is_constraint(self) -> bool {
        matches!(self, Section::Task | Section::Definition | Section::BeginWith | Section::Tone)
    }

    const ALL: [Section; 6] = [
        Section::Task,
        Section::Definition,
        Section::BeginWith,
        Section::Tone,
        Section::Question,
        Section::Content,
    ];
}

#[derive(Debug, Clone, Copy)]
pub struct PromptSpec<'a> {
    pub thread: &'a Thread,
    pub perspective: PerspectiveLabel,
    pub placement: Placement,
    pub parts: PromptParts,
}

impl<'a> PromptSpec<'a> {
    pub fn new(thread: &'a Thread, perspective: PerspectiveLabel) -> Self {
        PromptSpec {
            thread,
            perspective,
            placement: Placement::Before,
            parts: PromptParts::FULL,
        }
    }
}

pub const ANSWER_SEPARATOR: &str = " ||| ";

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Renders the prompt. Newlines inside the question or answers are folded to
/// spaces so every section stays on one line.
pub fn build_prompt(spec: &PromptSpec<'_>) -> Result<String> {
    let t = spec.thread;
    if t.answers.is_empty() {
        return Err(Error::InvalidArgument(format!("thread `{}` has no answers", t.id)));
    }
    let profile = profile_for(spec.perspective);
    let mut constraints = Vec::new();
    for s in spec.parts.sections() {
        let body = match s {
            Section::Task => format!(
                "Summarize the following content according to perspective: {}",
                spec.perspective
            ),
            Section::Definition => profile.definition.to_string(),
            Section::BeginWith => profile.anchor_text.to_string(),
            Section::Tone => profile.tone_label.to_string(),
            _ => unreachable!("content sections are not constraints"),
        };
        constraints.push(format!("{}: {}", s.header(), body));
    }
    let content = vec![
        format!("{}: {}", Section::Question.header(), one_line(&t.question)),
        format!(
            "{}: {}",
            Section::Content.header(),
            t.answers.iter().map(|a| one_line(a)).collect::<Vec<_>>().join(ANSWER_SEPARATOR)
        ),
    ];
    let lines = match spec.placement {
        Placement::Before => [constraints, content].concat(),
        Placement::After => [content, constraints].concat(),
    };
    Ok(lines.join("\n"))
}

/// Splits a rendered prompt back into its sections, in order.
pub fn parse_prompt(text: &str) -> Result<Vec<(Section, String)>> {
    text.lines()
        .map(|line| {
            Section::ALL
                .iter()
                .find_map(|&s| {
                    line.strip_prefix(s.header())
                        .and_then(|rest| rest.strip_prefix(": "))
                        .map(|body| (s, body.to_string()))
                })
                .ok_or_else(|| Error::InvalidArgument(format!("unrecognized prompt line: {line:?}")))
        })
        .collect()
}
