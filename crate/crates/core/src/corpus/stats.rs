use super::{Dataset, PerspectiveLabel, SplitAssignment, SplitName};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub spans: usize,
    pub summaries: usize,
}

/// Span and summary counts for each perspective, canonical order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PerspectiveCounts(pub [LabelCounts; PerspectiveLabel::COUNT]);

impl PerspectiveCounts {
    pub fn get(&self, label: PerspectiveLabel) -> LabelCounts {
        self.0[label.index()]
    }

    fn add(&mut self, other: &PerspectiveCounts) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            a.spans += b.spans;
            a.summaries += b.summaries;
        }
    }
}

impl Serialize for PerspectiveCounts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let m: BTreeMap<PerspectiveLabel, LabelCounts> =
            PerspectiveLabel::ALL.iter().map(|&l| (l, self.get(l))).collect();
        m.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PerspectiveCounts {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m: BTreeMap<PerspectiveLabel, LabelCounts> = BTreeMap::deserialize(d)?;
        let mut out = PerspectiveCounts::default();
        for (l, c) in m {
            out.0[l.index()] = c;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub threads: usize,
    pub perspectives: PerspectiveCounts,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: SplitStats,
    /// Empty when no split assignment was supplied.
    pub splits: BTreeMap<SplitName, SplitStats>,
    pub categories: BTreeMap<String, PerspectiveCounts>,
}

/// Counts spans and summaries per split, perspective and category.
///
/// With an assignment, every thread must belong to a split.
pub fn compute_stats(dataset: &Dataset, splits: Option<&SplitAssignment>) -> Result<CorpusStats> {
    let mut stats = CorpusStats::default();
    if splits.is_some() {
        for s in SplitName::ALL {
            stats.splits.insert(s, SplitStats::default());
        }
    }
    for t in &dataset.threads {
        let mut counts = PerspectiveCounts::default();
        for s in &t.spans {
            counts.0[s.label.index()].spans += 1;
        }
        for l in t.summaries.keys() {
            counts.0[l.index()].summaries += 1;
        }
        if let Some(assign) = splits {
            let split = assign
                .split_of(&t.id)
                .ok_or_else(|| Error::Data(format!("thread `{}` has no split assignment", t.id)))?;
            let entry = stats.splits.entry(split).or_default();
            entry.threads += 1;
            entry.perspectives.add(&counts);
        }
        stats.total.threads += 1;
        stats.total.perspectives.add(&counts);
        stats
            .categories
            .entry(t.category.clone())
            .or_default()
            .add(&counts);
    }
    Ok(stats)
}

impl CorpusStats {
    /// Aligned text table: one row per split plus the total, cells
    /// `spans/summaries`.
    pub fn render_table(&self) -> String {
        let mut rows: Vec<(String, &SplitStats)> = self
            .splits
            .iter()
            .map(|(k, v)| (format!("{} ({})", k, v.threads), v))
            .collect();
        rows.push((format!("total ({})", self.total.threads), &self.total));
        let mut out = format!("{:<16}", "");
        for l in PerspectiveLabel::ALL {
            out.push_str(&format!("{:>14}", l.as_str()));
        }
        out.push('\n');
        for (name, s) in rows {
            out.push_str(&format!("{name:<16}"));
            for l in PerspectiveLabel::ALL {
                let c = s.perspectives.get(l);
                out.push_str(&format!("{:>14}", format!("{}/{}", c.spans, c.summaries)));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SpanAnnotation, Thread};

    fn thread(id: &str, labels: &[PerspectiveLabel], summaries: &[PerspectiveLabel]) -> Thread {
        Thread {
            id: id.into(),
            question: "q".into(),
            category: "Dental".into(),
            answers: vec!["abc".into()],
            spans: labels
                .iter()
                .map(|&label| SpanAnnotation {
                    answer_idx: 0,
                    start: 0,
                    end: 1,
                    label,
                    text: "a".into(),
                })
                .collect(),
            summaries: summaries.iter().map(|&l| (l, "s".to_string())).collect(),
        }
    }

    #[test]
    fn empty_dataset() {
        let s = compute_stats(&Dataset::default(), None).unwrap();
        assert_eq!(s.total.threads, 0);
        assert_eq!(s.total.perspectives, PerspectiveCounts::default());
    }

    #[test]
    fn single_information() {
        use PerspectiveLabel::*;
        let d = Dataset::new(vec![thread("a", &[Information], &[Information])]);
        let s = compute_stats(&d, None).unwrap();
        assert_eq!(s.total.perspectives.get(Information), LabelCounts { spans: 1, summaries: 1 });
        for l in [Cause, Suggestion, Experience, Question] {
            assert_eq!(s.total.perspectives.get(l), LabelCounts::default());
        }
        assert_eq!(s.categories["Dental"].get(Information).spans, 1);
    }

    #[test]
    fn splits_sum_to_total_and_missing_is_error() {
        use PerspectiveLabel::*;
        let d = Dataset::new(vec![
            thread("a", &[Cause, Cause], &[Cause]),
            thread("b", &[Question], &[]),
        ]);
        let mut assign = SplitAssignment::default();
        assign.insert("a", SplitName::Train).unwrap();
        assert!(compute_stats(&d, Some(&assign)).is_err());
        assign.insert("b", SplitName::Test).unwrap();
        let s = compute_stats(&d, Some(&assign)).unwrap();
        let sum: usize = s.splits.values().map(|x| x.perspectives.get(Cause).spans).sum();
        assert_eq!(sum, s.total.perspectives.get(Cause).spans);
        assert_eq!(s.splits[&SplitName::Test].threads, 1);
        assert!(s.render_table().contains("2/1"));
    }

    #[test]
    fn reorder_invariance() {
        use PerspectiveLabel::*;
        let mut d = Dataset::new(vec![
            thread("a", &[Cause, Suggestion], &[Cause]),
            thread("b", &[Question], &[Question]),
            thread("c", &[Experience, Information], &[]),
        ]);
        let s1 = compute_stats(&d, None).unwrap();
        d.threads.reverse();
        assert_eq!(compute_stats(&d, None).unwrap(), s1);
    }
}
