//! Adapter from the published PUMA release layout to [`Thread`].
//!
//! Field mapping (the only place it lives):
//!
//! | PUMA                          | canonical            |
//! |-------------------------------|----------------------|
//! | `uri`                         | `id`                 |
//! | `question`                    | `question`           |
//! | `category` (optional)         | `category`           |
//! | `answers`                     | `answers`            |
//! | `labelled_answer_spans.LABEL[].txt` | span text, located in the answers |
//! | `labelled_summaries.LABEL_SUMMARY`  | `summaries.LABEL`    |
//!
//! PUMA span offsets point into its concatenated `raw_text`, so spans are
//! re-anchored by searching for `txt` in the answers, preferring the
//! occurrence nearest the original offset.

use super::{Dataset, PerspectiveLabel, SpanAnnotation, Thread};
use crate::{Error, Result};
use serde::Deserialize;
use std::collections::{BTreeMap, HashMap};
use std::io::Read;

#[derive(Debug, Deserialize)]
struct PumaSpan {
    txt: String,
    #[serde(default)]
    label_spans: Vec<usize>,
}

#[derive(Debug, Deserialize)]
struct PumaRecord {
    uri: serde_json::Value,
    question: String,
    #[serde(default)]
    category: Option<String>,
    answers: Vec<String>,
    #[serde(default)]
    labelled_answer_spans: HashMap<String, Vec<PumaSpan>>,
    #[serde(default)]
    labelled_summaries: HashMap<String, String>,
}

fn label_from_puma(key: &str) -> Result<PerspectiveLabel> {
    key.trim_end_matches("_SUMMARY").parse()
}

fn char_find_all(hay: &str, needle: &str) -> Vec<usize> {
    let mut out = Vec::new();
    if needle.is_empty() {
        return out;
    }
    for (byte_idx, _) in hay.match_indices(needle) {
        out.push(hay[..byte_idx].chars().count());
    }
    out
}

fn convert(rec: PumaRecord) -> Result<Thread> {
    let id = match &rec.uri {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let mut spans = Vec::new();
    let mut keys: Vec<&String> = rec.labelled_answer_spans.keys().collect();
    keys.sort_by_key(|k| label_from_puma(k).map(|l| l.index()).unwrap_or(usize::MAX));
    for key in keys {
        let label = label_from_puma(key)?;
        for s in &rec.labelled_answer_spans[key] {
            let txt = s.txt.trim();
            let hint = s.label_spans.first().copied().unwrap_or(0);
            let best = rec
                .answers
                .iter()
                .enumerate()
                .flat_map(|(ai, a)| char_find_all(a, txt).into_iter().map(move |p| (ai, p)))
                .min_by_key(|&(_, p)| (p as i64 - hint as i64).abs());
            let Some((answer_idx, start)) = best else {
                return Err(Error::Data(format!("{id}: span text not found in answers: {txt:?}")));
            };
            spans.push(SpanAnnotation {
                answer_idx,
                start,
                end: start + txt.chars().count(),
                label,
                text: txt.to_string(),
            });
        }
    }
    let mut summaries = BTreeMap::new();
    for (k, v) in &rec.labelled_summaries {
        if v.trim().is_empty() {
            continue;
        }
        summaries.insert(label_from_puma(k)?, v.clone());
    }
    Ok(Thread {
        id,
        question: rec.question,
        category: rec.category.unwrap_or_default(),
        answers: rec.answers,
        spans,
        summaries,
    })
}

/// Converts one PUMA record (as a JSON value) into a canonical thread.
pub fn import_puma(value: serde_json::Value) -> Result<Thread> {
    convert(serde_json::from_value(value)?)
}

/// Reads either a JSON array of PUMA records or one record per line.
pub fn import_puma_reader<R: Read>(mut reader: R) -> Result<Dataset> {
    let mut s = String::new();
    reader.read_to_string(&mut s)?;
    let trimmed = s.trim_start();
    let values: Vec<serde_json::Value> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed)?
    } else {
        trimmed
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?
    };
    Ok(Dataset::new(values.into_iter().map(import_puma).collect::<Result<_>>()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = include_str!("../../tests/fixtures/puma_sample.json");

    #[test]
    fn maps_bundled_fixture() {
        let ds = import_puma_reader(FIXTURE.as_bytes()).unwrap();
        assert_eq!(ds.len(), 2);
        let t = &ds.threads[0];
        assert_eq!(t.id, "1393");
        assert_eq!(t.answers.len(), 3);
        assert_eq!(t.summaries.len(), 3);
        assert!(t.summaries[&PerspectiveLabel::Suggestion].starts_with("It is suggested"));
        for s in &t.spans {
            let slice = crate::corpus::slice_code_points(&t.answers[s.answer_idx], s.start, s.end).unwrap();
            assert_eq!(slice, s.text);
        }
        let exp: Vec<_> = t.spans_for(PerspectiveLabel::Experience).collect();
        assert_eq!(exp.len(), 2);
        assert_eq!(exp[0].answer_idx, 1);
        // the canonical serialization of an imported record parses cleanly
        let mut buf = Vec::new();
        crate::corpus::write_corpus(&ds, &mut buf).unwrap();
        let back = crate::corpus::parse_corpus(&buf[..]).unwrap();
        assert!(back.diagnostics.is_empty(), "{:?}", back.diagnostics);
        assert_eq!(back.dataset, ds);
    }

    #[test]
    fn missing_span_text_is_error() {
        let v = serde_json::json!({
            "uri": 1, "question": "q", "answers": ["abc"],
            "labelled_answer_spans": {"CAUSE": [{"txt": "zzz", "label_spans": [0, 3]}]},
            "labelled_summaries": {}
        });
        assert!(import_puma(v).is_err());
    }
}
