//! Per-tier feature matrices.
//!
//! Metadata columns (M1) are numeric counts, hashed identifiers and one-hot
//! categoricals, with the rcdc and rac category blocks compressed by truncated
//! SVD. M2 appends a compressed concept block and M3 a compressed
//! abstract-embedding block. Vocabularies and SVD models are fitted on the
//! training partition only and carried in a [`FeatureContext`].

mod assemble;
mod export;
mod leakage;
mod onehot;
mod tsvd;
mod vocab;

pub use assemble::{assemble, fit_context, EmbeddingMap, FeatureConfig, FeatureContext, NUMERIC_COLUMNS};
pub use export::{read_feature_csv, write_feature_csv, FeatureManifest, LabeledFeatures};
pub use leakage::{leakage_guard, LeakageViolation, LEAKAGE_COLUMNS};
pub use onehot::one_hot;
pub use tsvd::{apply_tsvd, fit_tsvd, TsvdModel};
pub use vocab::{build_vocab, CategoricalField, Thresholds, VocabSpec, OTHER};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::matrix::DenseMatrix;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("unknown categorical field `{0}`")]
    UnknownField(String),
    #[error("cannot keep {k} components of a {rows}x{cols} block")]
    RankError { k: usize, rows: usize, cols: usize },
    #[error("expected {expected} columns, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("no embedding for record {0}")]
    MissingEmbedding(String),
    #[error("feature context has no fitted {0} block")]
    NotFitted(&'static str),
    #[error("unknown tier `{0}` (expected m1, m2 or m3)")]
    UnknownTier(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: std::path::PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    M1,
    M2,
    M3,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::M1, Tier::M2, Tier::M3];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::M1 => "m1",
            Tier::M2 => "m2",
            Tier::M3 => "m3",
        }
    }

    pub fn includes(self, block: BlockTag) -> bool {
        match block {
            BlockTag::Metadata => true,
            BlockTag::Concepts => self >= Tier::M2,
            BlockTag::Abstract => self == Tier::M3,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(Tier::M1),
            "m2" => Ok(Tier::M2),
            "m3" => Ok(Tier::M3),
            _ => Err(FeatureError::UnknownTier(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockTag {
    Metadata,
    Concepts,
    Abstract,
}

impl BlockTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockTag::Metadata => "metadata",
            BlockTag::Concepts => "concepts",
            BlockTag::Abstract => "abstract",
        }
    }
}

/// Dense feature matrix with one name and one block tag per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub values: DenseMatrix,
    pub column_names: Vec<String>,
    pub column_blocks: Vec<BlockTag>,
    pub tier: Tier,
    /// Publication id of each row.
    pub row_ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }

    pub fn block_width(&self, tag: BlockTag) -> usize {
        self.column_blocks.iter().filter(|&&b| b == tag).count()
    }
}
