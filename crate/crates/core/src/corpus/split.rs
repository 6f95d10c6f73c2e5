use super::Dataset;
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Val, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(SplitName::Train),
            "val" | "valid" | "validation" | "dev" => Ok(SplitName::Val),
            "test" => Ok(SplitName::Test),
            _ => Err(Error::UnknownSplit(s.to_string())),
        }
    }
}

/// Thread id to split. Serialized as `{"train": [ids], "val": [...], "test": [...]}`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitAssignment {
    by_id: HashMap<String, SplitName>,
    order: BTreeMap<SplitName, Vec<String>>,
}

impl SplitAssignment {
    pub fn insert(&mut self, id: impl Into<String>, split: SplitName) -> Result<()> {
        let id = id.into();
        if let Some(prev) = self.by_id.get(&id) {
            return Err(Error::Data(format!(
                "thread `{id}` assigned to both {prev} and {split}"
            )));
        }
        self.by_id.insert(id.clone(), split);
        self.order.entry(split).or_default().push(id);
        Ok(())
    }

    pub fn split_of(&self, id: &str) -> Option<SplitName> {
        self.by_id.get(id).copied()
    }

    pub fn ids(&self, split: SplitName) -> &[String] {
        self.order.get(&split).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count(&self, split: SplitName) -> usize {
        self.ids(split).len()
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(s)?;
        let mut out = SplitAssignment::default();
        for (name, ids) in raw {
            let split: SplitName = name.parse()?;
            for id in ids {
                out.insert(id, split)?;
            }
        }
        Ok(out)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut raw: BTreeMap<&str, &[String]> = BTreeMap::new();
        for s in SplitName::ALL {
            raw.insert(s.as_str(), self.ids(s));
        }
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json_str(&s)
    }
}

/// Shuffles threads with `seed` and cuts them by `ratios`.
///
/// Counts use the largest-remainder rule: floor every share, then hand the
/// leftover threads to the splits with the largest fractional parts (ties go
/// to train, then val).
pub fn split_dataset(dataset: &Dataset, ratios: (f64, f64, f64), seed: u64) -> Result<SplitAssignment> {
    let r = [ratios.0, ratios.1, ratios.2];
    if r.iter().any(|x| !x.is_finite() || *x < 0.0) || ((r[0] + r[1] + r[2]) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios {ratios:?} must be non-negative and sum to 1"
        )));
    }
    let n = dataset.len();
    let counts = largest_remainder(n, &r);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = SplitAssignment::default();
    let mut cursor = 0;
    for (split, c) in SplitName::ALL.into_iter().zip(counts) {
        for &i in &idx[cursor..cursor + c] {
            out.insert(dataset.threads[i].id.clone(), split)?;
        }
        cursor += c;
    }
    Ok(out)
}

fn largest_remainder(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, e) in counts.iter_mut().zip(&exact) {
        *c = (e + 1e-9).floor() as usize;
    }
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    // stable sort keeps train/val/test order on equal remainders
    order.sort_by(|&a, &b| {
        let fa = exact[a] - counts[a] as f64;
        let fb = exact[b] - counts[b] as f64;
        fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal)
    });
    for &k in order.iter().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}
