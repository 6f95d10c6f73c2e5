use crate::corpus::PerspectiveLabel;
use crate::prompt::profile_for;
use crate::{Error, Result};
use std::collections::BTreeSet;
use std::path::Path;

const BUNDLED: &str = include_str!("../../data/tone_lexicon.tsv");

/// Expanded tone keywords per perspective, canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToneLexicon {
    words: [Vec<String>; PerspectiveLabel::COUNT],
}

impl ToneLexicon {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text)
    }

    /// Parses `LABEL<TAB>w1,w2,...` records; `#` starts a comment line.
    /// The profile's tone keywords are always part of the expansion.
    pub fn parse(text: &str) -> Result<Self> {
        let mut words: [Vec<String>; 5] = Default::default();
        let mut seen = BTreeSet::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (label, list) = line
                .split_once('\t')
                .ok_or_else(|| Error::Data(format!("lexicon line {}: expected LABEL<TAB>words", n + 1)))?;
            let label: PerspectiveLabel = label.trim().parse()?;
            if !seen.insert(label) {
                return Err(Error::Data(format!("lexicon line {}: duplicate record for {label}", n + 1)));
            }
            let slot = &mut words[label.index()];
            for k in profile_for(label).tone_keywords {
                slot.push(k.to_string());
            }
            for w in list.split(',').map(|w| w.trim().to_lowercase()).filter(|w| !w.is_empty()) {
                if !slot.contains(&w) {
                    slot.push(w);
                }
            }
        }
        if let Some(missing) = PerspectiveLabel::ALL.iter().find(|l| !seen.contains(*l)) {
            return Err(Error::Data(format!("lexicon has no record for {missing}")));
        }
        Ok(ToneLexicon { words })
    }

    pub fn words(&self, label: PerspectiveLabel) -> &[String] {
        &self.words[label.index()]
    }

    pub fn all_words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().flatten().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_covers_every_label() {
        let lex = ToneLexicon::bundled();
        for l in PerspectiveLabel::ALL {
            let w = lex.words(l);
            assert!(!w.is_empty());
            for k in profile_for(l).tone_keywords {
                assert!(w.iter().any(|x| x == k), "{l} lacks {k}");
            }
        }
        assert!(lex.words(PerspectiveLabel::Suggestion).iter().any(|w| w == "advice"));
    }

    #[test]
    fn missing_or_duplicate_records_fail() {
        assert!(ToneLexicon::parse("SUGGESTION\tadvice\n").is_err());
        let dup = format!("{BUNDLED}SUGGESTION\tx\n");
        assert!(ToneLexicon::parse(&dup).is_err());
        assert!(ToneLexicon::parse("SUGGESTION advice").is_err());
    }

    #[test]
    fn keywords_added_even_if_omitted() {
        let text = "INFORMATION\tfact\nCAUSE\tx\nSUGGESTION\ty\nEXPERIENCE\tz\nQUESTION\tw\n";
        let lex = ToneLexicon::parse(text).unwrap();
        assert_eq!(lex.words(PerspectiveLabel::Information), &["informative", "educational", "fact"]);
    }
}
