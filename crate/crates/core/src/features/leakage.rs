use std::fmt;

use super::FeatureMatrix;
use crate::corpus::LeakageFields;

/// Column names that must never reach a model.
pub const LEAKAGE_COLUMNS: [&str; 4] = LeakageFields::NAMES;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeakageViolation {
    pub columns: Vec<String>,
}

impl fmt::Display for LeakageViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "leakage columns present: {}", self.columns.join(", "))
    }
}

impl std::error::Error for LeakageViolation {}

/// Rejects a matrix with any column named exactly like a leakage field.
///
/// Matching is by exact name only: a renamed copy such as `times_cited_v2`
/// passes. Upstream, the featurizer has no accessor for the leakage group, so
/// such a column can only come from a hand-built matrix.
pub fn leakage_guard(matrix: &FeatureMatrix) -> Result<(), LeakageViolation> {
    let columns: Vec<String> =
        matrix.column_names.iter().filter(|c| LEAKAGE_COLUMNS.contains(&c.as_str())).cloned().collect();
    if columns.is_empty() {
        Ok(())
    } else {
        Err(LeakageViolation { columns })
    }
}
