use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpenAccess {
    #[serde(alias = "Gold")]
    Gold,
    #[serde(alias = "Bronze")]
    Bronze,
    #[serde(alias = "Hybrid")]
    Hybrid,
    #[serde(alias = "Green")]
    Green,
    #[serde(alias = "Closed")]
    Closed,
}

impl OpenAccess {
    pub const ALL: [OpenAccess; 5] =
        [OpenAccess::Gold, OpenAccess::Bronze, OpenAccess::Hybrid, OpenAccess::Green, OpenAccess::Closed];

    pub fn as_str(self) -> &'static str {
        match self {
            OpenAccess::Gold => "gold",
            OpenAccess::Bronze => "bronze",
            OpenAccess::Hybrid => "hybrid",
            OpenAccess::Green => "green",
            OpenAccess::Closed => "closed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub term: String,
    pub importance: f64,
}

/// Time-dependent citation metrics. They encode the outcome, so they live in
/// their own group that the featurizer has no accessor for.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LeakageFields {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recent_citations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altmetric: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relative_citation_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times_cited: Option<u64>,
}

impl LeakageFields {
    pub const NAMES: [&'static str; 4] =
        ["recent_citations", "altmetric", "relative_citation_ratio", "times_cited"];
}

/// One publication. Serialized as a flat JSON object whose keys are the
/// snake_case Dimensions field names; keys this type does not know about are
/// kept in `extra` and written back unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub id: String,
    pub year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r#abstract: Option<String>,
    #[serde(default)]
    pub concepts: Vec<Concept>,
    #[serde(default)]
    pub category_rcdc: Vec<String>,
    #[serde(default)]
    pub category_hra: Vec<String>,
    #[serde(default)]
    pub category_hracs_rac: Vec<String>,
    #[serde(default)]
    pub reference_ids_count: u32,
    #[serde(default)]
    pub first_author_id: String,
    #[serde(default)]
    pub first_author_name: String,
    #[serde(default)]
    pub first_author_affiliation_id: String,
    #[serde(default)]
    pub first_author_affiliation_country: String,
    #[serde(default)]
    pub first_author_affiliation_name: String,
    #[serde(default = "one")]
    pub authors_count: u32,
    #[serde(default)]
    pub funders: Vec<String>,
    #[serde(default)]
    pub funder_countries: Vec<String>,
    #[serde(default)]
    pub journal_id: String,
    #[serde(default)]
    pub journal_title: String,
    pub open_access: OpenAccess,
    #[serde(default)]
    pub research_org_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub research_org_names_count: Option<u32>,
    #[serde(default)]
    pub research_org_country_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub research_org_country_names_count: Option<u32>,
    #[serde(default)]
    pub patent_citation_count: u32,
    #[serde(default)]
    pub trial_citation_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_patent_citation_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_trial_citation_year: Option<i32>,
    #[serde(flatten)]
    pub leakage: LeakageFields,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

fn one() -> u32 {
    1
}

impl PublicationRecord {
    /// A record with every optional field empty.
    pub fn new(id: impl Into<String>, year: i32, open_access: OpenAccess) -> Self {
        Self {
            id: id.into(),
            year,
            r#abstract: None,
            concepts: Vec::new(),
            category_rcdc: Vec::new(),
            category_hra: Vec::new(),
            category_hracs_rac: Vec::new(),
            reference_ids_count: 0,
            first_author_id: String::new(),
            first_author_name: String::new(),
            first_author_affiliation_id: String::new(),
            first_author_affiliation_country: String::new(),
            first_author_affiliation_name: String::new(),
            authors_count: 1,
            funders: Vec::new(),
            funder_countries: Vec::new(),
            journal_id: String::new(),
            journal_title: String::new(),
            open_access,
            research_org_names: Vec::new(),
            research_org_names_count: None,
            research_org_country_names: Vec::new(),
            research_org_country_names_count: None,
            patent_citation_count: 0,
            trial_citation_count: 0,
            first_patent_citation_year: None,
            first_trial_citation_year: None,
            leakage: LeakageFields::default(),
            extra: BTreeMap::new(),
        }
    }

    pub fn research_org_count(&self) -> u32 {
        self.research_org_names_count.unwrap_or(self.research_org_names.len() as u32)
    }

    pub fn research_org_country_count(&self) -> u32 {
        self.research_org_country_names_count
            .unwrap_or(self.research_org_country_names.len() as u32)
    }

    /// Checks the cross-field invariants. Returns the offending field name.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.id.is_empty() {
            return Err(("id", "empty identifier".into()));
        }
        if self.authors_count == 0 {
            return Err(("authors_count", "must be at least 1".into()));
        }
        if let Some(c) = self.research_org_names_count {
            if !self.research_org_names.is_empty() && c as usize != self.research_org_names.len() {
                return Err((
                    "research_org_names_count",
                    format!("count {c} but {} names listed", self.research_org_names.len()),
                ));
            }
        }
        if let Some(c) = self.research_org_country_names_count {
            if !self.research_org_country_names.is_empty()
                && c as usize != self.research_org_country_names.len()
            {
                return Err((
                    "research_org_country_names_count",
                    format!("count {c} but {} names listed", self.research_org_country_names.len()),
                ));
            }
        }
        for c in &self.concepts {
            if !(0.0..=1.0).contains(&c.importance) {
                return Err(("concepts", format!("importance {} outside [0,1]", c.importance)));
            }
        }
        check_first_year(
            "first_patent_citation_year",
            self.first_patent_citation_year,
            self.patent_citation_count,
            self.year,
        )?;
        check_first_year(
            "first_trial_citation_year",
            self.first_trial_citation_year,
            self.trial_citation_count,
            self.year,
        )?;
        Ok(())
    }

    pub fn is_present(&self, field: RecordField) -> bool {
        match field {
            RecordField::Id => !self.id.is_empty(),
            RecordField::Year => true,
            RecordField::Abstract => self.r#abstract.as_deref().is_some_and(|a| !a.trim().is_empty()),
            RecordField::Concepts => !self.concepts.is_empty(),
            RecordField::CategoryRcdc => !self.category_rcdc.is_empty(),
            RecordField::CategoryHra => !self.category_hra.is_empty(),
            RecordField::CategoryHracsRac => !self.category_hracs_rac.is_empty(),
            RecordField::FirstAuthorId => !self.first_author_id.is_empty(),
            RecordField::FirstAuthorName => !self.first_author_name.is_empty(),
            RecordField::FirstAuthorAffiliationId => !self.first_author_affiliation_id.is_empty(),
            RecordField::FirstAuthorAffiliationCountry => {
                !self.first_author_affiliation_country.is_empty()
            }
            RecordField::FirstAuthorAffiliationName => !self.first_author_affiliation_name.is_empty(),
            RecordField::Funders => !self.funders.is_empty(),
            RecordField::FunderCountries => !self.funder_countries.is_empty(),
            RecordField::JournalId => !self.journal_id.is_empty(),
            RecordField::JournalTitle => !self.journal_title.is_empty(),
            RecordField::ResearchOrgNames => !self.research_org_names.is_empty(),
            RecordField::ResearchOrgCountryNames => !self.research_org_country_names.is_empty(),
        }
    }
}

fn check_first_year(
    field: &'static str,
    first: Option<i32>,
    count: u32,
    year: i32,
) -> Result<(), (&'static str, String)> {
    if let Some(first) = first {
        if count == 0 {
            return Err((field, "first citation year given but citation count is 0".into()));
        }
        if first < year {
            return Err((field, format!("first citation {first} precedes publication {year}")));
        }
    }
    Ok(())
}

/// Fields that can be required to be present by the corpus filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordField {
    Id,
    Year,
    Abstract,
    Concepts,
    CategoryRcdc,
    CategoryHra,
    CategoryHracsRac,
    FirstAuthorId,
    FirstAuthorName,
    FirstAuthorAffiliationId,
    FirstAuthorAffiliationCountry,
    FirstAuthorAffiliationName,
    Funders,
    FunderCountries,
    JournalId,
    JournalTitle,
    ResearchOrgNames,
    ResearchOrgCountryNames,
}

impl RecordField {
    pub const ALL: [RecordField; 18] = [
        RecordField::Id,
        RecordField::Year,
        RecordField::Abstract,
        RecordField::Concepts,
        RecordField::CategoryRcdc,
        RecordField::CategoryHra,
        RecordField::CategoryHracsRac,
        RecordField::FirstAuthorId,
        RecordField::FirstAuthorName,
        RecordField::FirstAuthorAffiliationId,
        RecordField::FirstAuthorAffiliationCountry,
        RecordField::FirstAuthorAffiliationName,
        RecordField::Funders,
        RecordField::FunderCountries,
        RecordField::JournalId,
        RecordField::JournalTitle,
        RecordField::ResearchOrgNames,
        RecordField::ResearchOrgCountryNames,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecordField::Id => "id",
            RecordField::Year => "year",
            RecordField::Abstract => "abstract",
            RecordField::Concepts => "concepts",
            RecordField::CategoryRcdc => "category_rcdc",
            RecordField::CategoryHra => "category_hra",
            RecordField::CategoryHracsRac => "category_hracs_rac",
            RecordField::FirstAuthorId => "first_author_id",
            RecordField::FirstAuthorName => "first_author_name",
            RecordField::FirstAuthorAffiliationId => "first_author_affiliation_id",
            RecordField::FirstAuthorAffiliationCountry => "first_author_affiliation_country",
            RecordField::FirstAuthorAffiliationName => "first_author_affiliation_name",
            RecordField::Funders => "funders",
            RecordField::FunderCountries => "funder_countries",
            RecordField::JournalId => "journal_id",
            RecordField::JournalTitle => "journal_title",
            RecordField::ResearchOrgNames => "research_org_names",
            RecordField::ResearchOrgCountryNames => "research_org_country_names",
        }
    }
}

impl fmt::Display for RecordField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecordField {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RecordField::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| CorpusError::UnknownField(s.to_string()))
    }
}
