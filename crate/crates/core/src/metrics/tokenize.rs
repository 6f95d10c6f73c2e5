use serde::{Deserialize, Serialize};
use std::ops::Deref;

/// Lowercased evaluation tokens. Only [`tokenize_eval`] builds these, so no
/// token is ever empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct EvalTokens(Vec<String>);

impl EvalTokens {
    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Wraps already-tokenized words, dropping empty entries. Used when the
    /// tokens come out of a vocabulary that was itself built with
    /// [`tokenize_eval`].
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        EvalTokens(
            tokens
                .into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty())
                .collect(),
        )
    }

    pub fn as_strs(&self) -> Vec<&str> {
        self.0.iter().map(String::as_str).collect()
    }
}

impl Deref for EvalTokens {
    type Target = [String];
    fn deref(&self) -> &[String] {
        &self.0
    }
}

/// A token with its half-open code-point range in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffsetToken {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_joiner(c: char) -> bool {
    is_apostrophe(c) || c == '-'
}

/// Tokenizes `text` and reports code-point offsets for every kept token.
///
/// Words are maximal alphanumeric runs; an apostrophe or hyphen between two
/// alphanumerics stays inside the word (`user's`, `low-fat`). Every other
/// non-space character is punctuation; a run of the same punctuation
/// character forms one token, and runs of two or more dots (or `…`) are
/// dropped.
pub fn tokenize_with_offsets(text: &str) -> Vec<OffsetToken> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let start = i;
            let mut word = String::new();
            while i < chars.len() {
                let ch = chars[i];
                if ch.is_alphanumeric() {
                    word.extend(ch.to_lowercase());
                    i += 1;
                } else if is_joiner(ch)
                    && !word.is_empty()
                    && i + 1 < chars.len()
                    && chars[i + 1].is_alphanumeric()
                {
                    word.push(if is_apostrophe(ch) { '\'' } else { ch });
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(OffsetToken {
                text: word,
                start,
                end: i,
            });
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i] == c {
            i += 1;
        }
        let run = i - start;
        if (c == '.' && run > 1) || c == '\u{2026}' {
            continue;
        }
        out.push(OffsetToken {
            text: std::iter::repeat_n(c, run).collect(),
            start,
            end: i,
        });
    }
    out
}

/// The evaluation tokenizer shared by metrics, vocabularies and anchors.
pub fn tokenize_eval(text: &str) -> EvalTokens {
    EvalTokens(
        tokenize_with_offsets(text)
            .into_iter()
            .map(|t| t.text)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_ellipsis() {
        assert_eq!(
            tokenize_eval("It is suggested...").as_strs(),
            vec!["it", "is", "suggested"]
        );
        assert_eq!(tokenize_eval("wait\u{2026} what").as_strs(), vec!["wait", "what"]);
    }

    #[test]
    fn empty_text() {
        assert!(tokenize_eval("").is_empty());
        assert!(tokenize_eval("   \n\t").is_empty());
    }

    #[test]
    fn question_mark_is_split() {
        assert_eq!(tokenize_eval("Why?").as_strs(), vec!["why", "?"]);
    }

    #[test]
    fn keeps_internal_apostrophe_and_hyphen() {
        assert_eq!(
            tokenize_eval("In user's experience, low-fat diets work.").as_strs(),
            vec!["in", "user's", "experience", ",", "low-fat", "diets", "work", "."]
        );
        assert_eq!(tokenize_eval("users' -x").as_strs(), vec!["users", "'", "-", "x"]);
    }

    #[test]
    fn punctuation_runs_group() {
        assert_eq!(tokenize_eval("a ||| b !!").as_strs(), vec!["a", "|||", "b", "!!"]);
    }

    #[test]
    fn offsets_are_code_points() {
        let toks = tokenize_with_offsets("héllo wörld");
        assert_eq!(toks[1].start, 6);
        assert_eq!(toks[1].end, 11);
    }
}
