use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CorpusError, PublicationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Patents,
    Trials,
}

impl LabelKind {
    pub fn citation_count(self, r: &PublicationRecord) -> u32 {
        match self {
            LabelKind::Patents => r.patent_citation_count,
            LabelKind::Trials => r.trial_citation_count,
        }
    }

    pub fn first_citation_year(self, r: &PublicationRecord) -> Option<i32> {
        match self {
            LabelKind::Patents => r.first_patent_citation_year,
            LabelKind::Trials => r.first_trial_citation_year,
        }
    }

    pub fn label(self, r: &PublicationRecord) -> u8 {
        u8::from(self.citation_count(r) >= 1)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelKind::Patents => "patents",
            LabelKind::Trials => "trials",
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LabelKind {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "patents" | "patent" => Ok(LabelKind::Patents),
            "trials" | "trial" | "clinical_trials" => Ok(LabelKind::Trials),
            other => Err(CorpusError::ConfigError(format!("unknown label kind `{other}`"))),
        }
    }
}

/// Records paired with a binary outcome for one label kind.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub records: Vec<PublicationRecord>,
    pub labels: Vec<u8>,
    pub kind: LabelKind,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    /// Subset by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            kind: self.kind,
        }
    }

    pub fn ids(&self) -> Vec<String> {
        self.records.iter().map(|r| r.id.clone()).collect()
    }
}

/// Label 1 iff the record has at least one citation of `kind`; one citation
/// and many are not distinguished.
pub fn assign_labels(records: Vec<PublicationRecord>, kind: LabelKind) -> LabeledDataset {
    let labels = records.iter().map(|r| kind.label(r)).collect();
    LabeledDataset { records, labels, kind }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::OpenAccess;

    fn rec(patents: u32, trials: u32) -> PublicationRecord {
        let mut r = PublicationRecord::new("x", 2000, OpenAccess::Closed);
        r.patent_citation_count = patents;
        r.trial_citation_count = trials;
        r
    }

    #[test]
    fn zero_and_many_citations() {
        let ds = assign_labels(vec![rec(0, 3), rec(7, 0)], LabelKind::Patents);
        assert_eq!(ds.labels, vec![0, 1]);
        let ds = assign_labels(ds.records, LabelKind::Trials);
        assert_eq!(ds.labels, vec![1, 0]);
    }

    #[test]
    fn idempotent_and_order_independent() {
        let recs = vec![rec(0, 0), rec(2, 0), rec(1, 1), rec(0, 5)];
        let a = assign_labels(recs.clone(), LabelKind::Patents);
        let b = assign_labels(a.records.clone(), LabelKind::Patents);
        assert_eq!(a, b);
        let mut rev = recs;
        rev.reverse();
        let c = assign_labels(rev, LabelKind::Patents);
        let mut l = c.labels.clone();
        l.reverse();
        assert_eq!(l, a.labels);
    }

    #[test]
    fn parse_kind() {
        assert_eq!("Patents".parse::<LabelKind>().unwrap(), LabelKind::Patents);
        assert_eq!("trials".parse::<LabelKind>().unwrap(), LabelKind::Trials);
        assert!("grants".parse::<LabelKind>().is_err());
    }
}
