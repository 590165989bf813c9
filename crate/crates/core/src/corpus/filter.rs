use serde::{Deserialize, Serialize};

use super::{CorpusError, PublicationRecord, RecordField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusFilterConfig {
    pub year_min: i32,
    pub year_max: i32,
    /// A record missing any of these is excluded as "insufficient data".
    pub required_fields: Vec<RecordField>,
}

impl Default for CorpusFilterConfig {
    fn default() -> Self {
        Self {
            year_min: 1990,
            year_max: 2017,
            required_fields: vec![
                RecordField::Abstract,
                RecordField::JournalId,
                RecordField::FirstAuthorId,
                RecordField::Year,
            ],
        }
    }
}

impl CorpusFilterConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.year_min > self.year_max {
            return Err(CorpusError::ConfigError(format!(
                "year_min {} exceeds year_max {}",
                self.year_min, self.year_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub insufficient_data: usize,
    pub out_of_window: usize,
}

/// Splits records into kept and excluded. A record that both lacks data and
/// falls outside the window is counted once, as insufficient data.
pub fn filter_corpus(
    records: &[PublicationRecord],
    config: &CorpusFilterConfig,
) -> (Vec<PublicationRecord>, FilterReport) {
    let mut report = FilterReport { input: records.len(), ..Default::default() };
    let mut kept = Vec::new();
    for r in records {
        if !config.required_fields.iter().all(|&f| r.is_present(f)) {
            report.insufficient_data += 1;
        } else if r.year < config.year_min || r.year > config.year_max {
            report.out_of_window += 1;
        } else {
            kept.push(r.clone());
        }
    }
    report.kept = kept.len();
    (kept, report)
}
