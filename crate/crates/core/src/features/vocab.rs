use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::corpus::PublicationRecord;
use crate::util::sha256_hex;

/// Catch-all category appended to every scalar field's vocabulary.
pub const OTHER: &str = "⟨other⟩";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalField {
    FirstAuthorName,
    FirstAuthorAffiliationCountry,
    FirstAuthorAffiliationName,
    JournalTitle,
    OpenAccess,
    Funders,
    FunderCountries,
    ResearchOrgNames,
    ResearchOrgCountryNames,
    CategoryHra,
    CategoryRcdc,
    CategoryHracsRac,
    Concepts,
}

impl CategoricalField {
    pub const ALL: [CategoricalField; 13] = [
        CategoricalField::FirstAuthorName,
        CategoricalField::FirstAuthorAffiliationCountry,
        CategoricalField::FirstAuthorAffiliationName,
        CategoricalField::JournalTitle,
        CategoricalField::OpenAccess,
        CategoricalField::Funders,
        CategoricalField::FunderCountries,
        CategoricalField::ResearchOrgNames,
        CategoricalField::ResearchOrgCountryNames,
        CategoricalField::CategoryHra,
        CategoricalField::CategoryRcdc,
        CategoricalField::CategoryHracsRac,
        CategoricalField::Concepts,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CategoricalField::FirstAuthorName => "first_author_name",
            CategoricalField::FirstAuthorAffiliationCountry => "first_author_affiliation_country",
            CategoricalField::FirstAuthorAffiliationName => "first_author_affiliation_name",
            CategoricalField::JournalTitle => "journal_title",
            CategoricalField::OpenAccess => "open_access",
            CategoricalField::Funders => "funders",
            CategoricalField::FunderCountries => "funder_countries",
            CategoricalField::ResearchOrgNames => "research_org_names",
            CategoricalField::ResearchOrgCountryNames => "research_org_country_names",
            CategoricalField::CategoryHra => "category_hra",
            CategoricalField::CategoryRcdc => "category_rcdc",
            CategoricalField::CategoryHracsRac => "category_hracs_rac",
            CategoricalField::Concepts => "concepts",
        }
    }

    /// Single-valued fields; the rest are lists.
    pub fn is_scalar(self) -> bool {
        matches!(
            self,
            CategoricalField::FirstAuthorName
                | CategoricalField::FirstAuthorAffiliationCountry
                | CategoricalField::FirstAuthorAffiliationName
                | CategoricalField::JournalTitle
                | CategoricalField::OpenAccess
        )
    }

    /// Distinct non-empty values of this field in `r`, in record order.
    pub fn values(self, r: &PublicationRecord) -> Vec<&str> {
        let raw: Vec<&str> = match self {
            CategoricalField::FirstAuthorName => scalar(&r.first_author_name),
            CategoricalField::FirstAuthorAffiliationCountry => scalar(&r.first_author_affiliation_country),
            CategoricalField::FirstAuthorAffiliationName => scalar(&r.first_author_affiliation_name),
            CategoricalField::JournalTitle => scalar(&r.journal_title),
            CategoricalField::OpenAccess => vec![r.open_access.as_str()],
            CategoricalField::Funders => r.funders.iter().map(String::as_str).collect(),
            CategoricalField::FunderCountries => r.funder_countries.iter().map(String::as_str).collect(),
            CategoricalField::ResearchOrgNames => r.research_org_names.iter().map(String::as_str).collect(),
            CategoricalField::ResearchOrgCountryNames => {
                r.research_org_country_names.iter().map(String::as_str).collect()
            }
            CategoricalField::CategoryHra => r.category_hra.iter().map(String::as_str).collect(),
            CategoricalField::CategoryRcdc => r.category_rcdc.iter().map(String::as_str).collect(),
            CategoricalField::CategoryHracsRac => r.category_hracs_rac.iter().map(String::as_str).collect(),
            CategoricalField::Concepts => r.concepts.iter().map(|c| c.term.as_str()).collect(),
        };
        let mut seen = BTreeSet::new();
        raw.into_iter().filter(|v| !v.is_empty() && seen.insert(*v)).collect()
    }
}

fn scalar(s: &str) -> Vec<&str> {
    if s.is_empty() {
        Vec::new()
    } else {
        vec![s]
    }
}

impl fmt::Display for CategoricalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CategoricalField {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| FeatureError::UnknownField(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Per-field minimum number of fitting records a category must occur in.
    /// Fields not listed use `default_min_count`.
    pub min_count: BTreeMap<CategoricalField, usize>,
    pub default_min_count: usize,
    pub concept_importance_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            min_count: BTreeMap::from([(CategoricalField::Concepts, 20)]),
            default_min_count: 5,
            concept_importance_min: 0.4,
        }
    }
}

impl Thresholds {
    pub fn min_count_for(&self, field: CategoricalField) -> usize {
        self.min_count.get(&field).copied().unwrap_or(self.default_min_count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabSpec {
    pub vocab: BTreeMap<CategoricalField, Vec<String>>,
    pub thresholds: Thresholds,
}

impl VocabSpec {
    pub fn categories(&self, field: CategoricalField) -> Option<&[String]> {
        self.vocab.get(&field).map(Vec::as_slice)
    }

    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("vocab serializes").as_bytes())
    }
}

/// Counts each category once per record. Categories reaching the field's
/// minimum count are kept, ordered by count descending then name. Concepts
/// must additionally reach the importance cutoff in at least one record.
pub fn build_vocab(fit_records: &[PublicationRecord], thresholds: &Thresholds) -> VocabSpec {
    let mut vocab = BTreeMap::new();
    for field in CategoricalField::ALL {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in fit_records {
            for v in field.values(r) {
                *counts.entry(v).or_default() += 1;
            }
        }
        let important: BTreeSet<&str> = if field == CategoricalField::Concepts {
            fit_records
                .iter()
                .flat_map(|r| &r.concepts)
                .filter(|c| c.importance >= thresholds.concept_importance_min)
                .map(|c| c.term.as_str())
                .collect()
        } else {
            BTreeSet::new()
        };
        let min = thresholds.min_count_for(field);
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(v, c)| c >= min && (field != CategoricalField::Concepts || important.contains(v)))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let mut list: Vec<String> = kept.into_iter().map(|(v, _)| v.to_string()).collect();
        if field.is_scalar() {
            list.retain(|v| v != OTHER);
            list.push(OTHER.to_string());
        }
        vocab.insert(field, list);
    }
    VocabSpec { vocab, thresholds: thresholds.clone() }
}
