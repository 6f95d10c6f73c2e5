use super::{slice_code_points, Dataset, PerspectiveLabel, SpanAnnotation, Thread, MAX_ANSWERS};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// A problem found in one input line. `path` names the offending field, e.g.
/// `spans[0].end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub path: String,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "line {}: {sev}: {}: {}", self.line, self.path, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub dataset: Dataset,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseOutcome {
    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Warning)
    }
}

#[derive(Serialize)]
struct WireSpan {
    answer_idx: usize,
    start: usize,
    end: usize,
    label: PerspectiveLabel,
}

#[derive(Serialize)]
struct WireThread<'a> {
    id: &'a str,
    question: &'a str,
    category: &'a str,
    answers: &'a [String],
    spans: Vec<WireSpan>,
    summaries: &'a BTreeMap<PerspectiveLabel, String>,
}

pub fn thread_to_line(t: &Thread) -> Result<String> {
    let wire = WireThread {
        id: &t.id,
        question: &t.question,
        category: &t.category,
        answers: &t.answers,
        spans: t
            .spans
            .iter()
            .map(|s| WireSpan {
                answer_idx: s.answer_idx,
                start: s.start,
                end: s.end,
                label: s.label,
            })
            .collect(),
        summaries: &t.summaries,
    };
    Ok(serde_json::to_string(&wire)?)
}

/// Writes the canonical JSONL form, one thread per line.
pub fn write_corpus<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    for t in &dataset.threads {
        out.write_all(thread_to_line(t)?.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_corpus_file(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_corpus(dataset, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_corpus_file(path: impl AsRef<Path>) -> Result<ParseOutcome> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
    parse_corpus(std::io::BufReader::new(f))
}

/// Parses canonical JSONL. Malformed records become diagnostics; only a
/// failing reader aborts the parse.
pub fn parse_corpus<R: BufRead>(mut reader: R) -> Result<ParseOutcome> {
    let mut outcome = ParseOutcome::default();
    let mut buf = Vec::new();
    let mut line_no = 0;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let text = match std::str::from_utf8(&buf) {
            Ok(t) => t,
            Err(e) => {
                outcome.diagnostics.push(Diagnostic {
                    line: line_no,
                    path: "$".into(),
                    severity: Severity::Error,
                    message: format!("invalid utf-8: {e}"),
                });
                continue;
            }
        };
        if text.trim().is_empty() {
            continue;
        }
        let mut v = RecordValidator::new(line_no);
        match serde_json::from_str::<Value>(text) {
            Ok(value) => {
                if let Some(t) = v.validate(&value) {
                    outcome.dataset.threads.push(t);
                }
            }
            Err(e) => v.error("$", format!("malformed json: {e}")),
        }
        outcome.diagnostics.extend(v.diagnostics);
    }
    Ok(outcome)
}

struct RecordValidator {
    line: usize,
    diagnostics: Vec<Diagnostic>,
    failed: bool,
}

impl RecordValidator {
    fn new(line: usize) -> Self {
        RecordValidator {
            line,
            diagnostics: Vec::new(),
            failed: false,
        }
    }

    fn push(&mut self, path: &str, severity: Severity, message: String) {
        self.diagnostics.push(Diagnostic {
            line: self.line,
            path: path.to_string(),
            severity,
            message,
        });
    }

    fn error(&mut self, path: &str, message: impl Into<String>) {
        self.failed = true;
        self.push(path, Severity::Error, message.into());
    }

    fn string(&mut self, obj: &Map<String, Value>, key: &str, nonempty: bool) -> Option<String> {
        match obj.get(key) {
            Some(Value::String(s)) if nonempty && s.trim().is_empty() => {
                self.error(key, "must not be empty");
                None
            }
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.error(key, "expected a string");
                None
            }
            None => {
                self.error(key, "missing field");
                None
            }
        }
    }

    fn index(&mut self, obj: &Map<String, Value>, key: &str, path: &str) -> Option<usize> {
        match obj.get(key) {
            Some(Value::Number(n)) => match n.as_u64() {
                Some(x) => Some(x as usize),
                None => {
                    self.error(path, "expected a non-negative integer");
                    None
                }
            },
            Some(_) => {
                self.error(path, "expected a non-negative integer");
                None
            }
            None => {
                self.error(path, "missing field");
                None
            }
        }
    }

    fn validate(&mut self, value: &Value) -> Option<Thread> {
        let Some(obj) = value.as_object() else {
            self.error("$", "expected a json object");
            return None;
        };
        let id = self.string(obj, "id", true);
        let question = self.string(obj, "question", true);
        let category = self.string(obj, "category", false);

        let mut answers = Vec::new();
        match obj.get("answers") {
            Some(Value::Array(items)) => {
                if items.is_empty() || items.len() > MAX_ANSWERS {
                    self.error("answers", format!("expected 1..={MAX_ANSWERS} answers, found {}", items.len()));
                }
                for (i, a) in items.iter().enumerate() {
                    match a {
                        Value::String(s) if !s.trim().is_empty() => answers.push(s.clone()),
                        Value::String(_) => self.error(&format!("answers[{i}]"), "must not be empty"),
                        _ => self.error(&format!("answers[{i}]"), "expected a string"),
                    }
                }
            }
            Some(_) => self.error("answers", "expected an array"),
            None => self.error("answers", "missing field"),
        }
        let answers_ok = !self.failed;

        let mut spans = Vec::new();
        match obj.get("spans") {
            Some(Value::Array(items)) => {
                for (i, s) in items.iter().enumerate() {
                    if let Some(span) = self.span(i, s, &answers, answers_ok) {
                        spans.push(span);
                    }
                }
            }
            Some(_) => self.error("spans", "expected an array"),
            None => self.error("spans", "missing field"),
        }

        let mut summaries = BTreeMap::new();
        match obj.get("summaries") {
            Some(Value::Object(map)) => {
                for (k, v) in map {
                    let path = format!("summaries.{k}");
                    let label = match k.parse::<PerspectiveLabel>() {
                        Ok(l) if l.as_str() == k => l,
                        _ => {
                            self.error(&path, format!("unknown perspective label `{k}`"));
                            continue;
                        }
                    };
                    match v {
                        Value::String(s) if !s.trim().is_empty() => {
                            summaries.insert(label, s.clone());
                        }
                        Value::String(_) => self.error(&path, "must not be empty"),
                        _ => self.error(&path, "expected a string"),
                    }
                }
            }
            Some(_) => self.error("summaries", "expected an object"),
            None => self.error("summaries", "missing field"),
        }

        if self.failed {
            return None;
        }
        for label in summaries.keys() {
            if !spans.iter().any(|s: &SpanAnnotation| s.label == *label) {
                self.push(
                    &format!("summaries.{label}"),
                    Severity::Warning,
                    format!("summary for {label} has no supporting {label} span"),
                );
            }
        }
        Some(Thread {
            id: id?,
            question: question?,
            category: category?,
            answers,
            spans,
            summaries,
        })
    }

    fn span(&mut self, i: usize, value: &Value, answers: &[String], answers_ok: bool) -> Option<SpanAnnotation> {
        let base = format!("spans[{i}]");
        let Some(obj) = value.as_object() else {
            self.error(&base, "expected an object");
            return None;
        };
        let answer_idx = self.index(obj, "answer_idx", &format!("{base}.answer_idx"));
        let start = self.index(obj, "start", &format!("{base}.start"));
        let end = self.index(obj, "end", &format!("{base}.end"));
        let label = match obj.get("label") {
            Some(Value::String(s)) => match s.parse::<PerspectiveLabel>() {
                Ok(l) if l.as_str() == s => Some(l),
                _ => {
                    self.error(&format!("{base}.label"), format!("unknown perspective label `{s}`"));
                    None
                }
            },
            Some(_) => {
                self.error(&format!("{base}.label"), "expected a string");
                None
            }
            None => {
                self.error(&format!("{base}.label"), "missing field");
                None
            }
        };
        let (answer_idx, start, end, label) = (answer_idx?, start?, end?, label?);
        if !answers_ok {
            return None;
        }
        let Some(answer) = answers.get(answer_idx) else {
            self.error(
                &format!("{base}.answer_idx"),
                format!("answer index {answer_idx} out of range for {} answers", answers.len()),
            );
            return None;
        };
        let len = answer.chars().count();
        if end > len {
            self.error(&format!("{base}.end"), format!("end {end} exceeds answer length {len}"));
            return None;
        }
        if start >= end {
            self.error(&format!("{base}.start"), format!("start {start} must be less than end {end}"));
            return None;
        }
        let text = slice_code_points(answer, start, end)?;
        Some(SpanAnnotation {
            answer_idx,
            start,
            end,
            label,
            text,
        })
    }
}
