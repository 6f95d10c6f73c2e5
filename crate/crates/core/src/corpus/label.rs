use crate::Error;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The five perspectives. Declaration order is the canonical order used for
/// every 5-vector in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PerspectiveLabel {
    Information,
    Cause,
    Suggestion,
    Experience,
    Question,
}

impl PerspectiveLabel {
    pub const ALL: [PerspectiveLabel; 5] = [
        PerspectiveLabel::Information,
        PerspectiveLabel::Cause,
        PerspectiveLabel::Suggestion,
        PerspectiveLabel::Experience,
        PerspectiveLabel::Question,
    ];

    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PerspectiveLabel::Information => "INFORMATION",
            PerspectiveLabel::Cause => "CAUSE",
            PerspectiveLabel::Suggestion => "SUGGESTION",
            PerspectiveLabel::Experience => "EXPERIENCE",
            PerspectiveLabel::Question => "QUESTION",
        }
    }
}

impl fmt::Display for PerspectiveLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerspectiveLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}
