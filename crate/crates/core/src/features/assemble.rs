use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::vocab::{build_vocab, CategoricalField, Thresholds, VocabSpec};
use super::{apply_tsvd, fit_tsvd, one_hot, BlockTag, FeatureError, FeatureMatrix, Tier, TsvdModel};
use crate::corpus::PublicationRecord;
use crate::embed::EmbeddingVector;
use crate::matrix::DenseMatrix;
use crate::util::fnv1a32;

/// Abstract embeddings keyed by publication id.
pub type EmbeddingMap = BTreeMap<String, EmbeddingVector>;

pub const NUMERIC_COLUMNS: [&str; 7] = [
    "reference_ids_count",
    "authors_count",
    "research_org_names_count",
    "research_org_country_names_count",
    "first_author_id_hash",
    "first_author_affiliation_id_hash",
    "journal_id_hash",
];

/// Metadata fields kept as plain one-hot columns.
const ONE_HOT_FIELDS: [CategoricalField; 10] = [
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
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub thresholds: Thresholds,
    pub k_rcdc: usize,
    pub k_rac: usize,
    pub k_concepts: usize,
    pub k_abstract: usize,
    pub seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { thresholds: Thresholds::default(), k_rcdc: 32, k_rac: 32, k_concepts: 64, k_abstract: 64, seed: 0 }
    }
}

/// Everything fitted on the training partition that featurizing another
/// partition needs. A block whose vocabulary came out empty has no model and
/// contributes no columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureContext {
    pub config: FeatureConfig,
    pub vocab: VocabSpec,
    pub rcdc: Option<TsvdModel>,
    pub rac: Option<TsvdModel>,
    pub concepts: Option<TsvdModel>,
    pub abstract_embedding: Option<TsvdModel>,
}

impl FeatureContext {
    pub fn tsvd_hashes(&self) -> BTreeMap<String, String> {
        [&self.rcdc, &self.rac, &self.concepts, &self.abstract_embedding]
            .into_iter()
            .flatten()
            .map(|m| (m.fitted_block.clone(), m.hash()))
            .collect()
    }
}

/// Fits vocabularies and per-block SVD models on `train`. The abstract model
/// is fitted only when `embeddings` is given.
pub fn fit_context(
    train: &[PublicationRecord],
    embeddings: Option<&EmbeddingMap>,
    config: &FeatureConfig,
) -> Result<FeatureContext, FeatureError> {
    let vocab = build_vocab(train, &config.thresholds);
    let rcdc = fit_block("category_rcdc", &one_hot(train, &vocab, CategoricalField::CategoryRcdc)?, config.k_rcdc, config.seed)?;
    let rac = fit_block(
        "category_hracs_rac",
        &one_hot(train, &vocab, CategoricalField::CategoryHracsRac)?,
        config.k_rac,
        config.seed.wrapping_add(1),
    )?;
    let concepts = fit_block(
        "concepts",
        &one_hot(train, &vocab, CategoricalField::Concepts)?,
        config.k_concepts,
        config.seed.wrapping_add(2),
    )?;
    let abstract_embedding = match embeddings {
        Some(map) => fit_block("abstract", &embedding_block(train, map, None)?, config.k_abstract, config.seed.wrapping_add(3))?,
        None => None,
    };
    Ok(FeatureContext { config: config.clone(), vocab, rcdc, rac, concepts, abstract_embedding })
}

fn fit_block(name: &str, block: &DenseMatrix, k: usize, seed: u64) -> Result<Option<TsvdModel>, FeatureError> {
    let k = k.min(block.rows()).min(block.cols());
    if k == 0 {
        return Ok(None);
    }
    Ok(Some(fit_tsvd(block, k, seed)?.named(name)))
}

fn embedding_block(
    records: &[PublicationRecord],
    embeddings: &EmbeddingMap,
    width: Option<usize>,
) -> Result<DenseMatrix, FeatureError> {
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        let v = embeddings.get(&r.id).ok_or_else(|| FeatureError::MissingEmbedding(r.id.clone()))?;
        let expected = width.unwrap_or_else(|| rows.first().map_or(v.dim(), |f: &&[f64]| f.len()));
        if v.dim() != expected {
            return Err(FeatureError::ShapeMismatch { expected, got: v.dim() });
        }
        rows.push(v.as_slice());
    }
    if rows.is_empty() {
        return Ok(DenseMatrix::zeros(0, width.unwrap_or(0)));
    }
    Ok(DenseMatrix::from_rows(&rows))
}

fn hash_id(id: &str) -> f64 {
    if id.is_empty() {
        0.0
    } else {
        f64::from(fnv1a32(id.as_bytes()))
    }
}

struct Builder {
    blocks: Vec<DenseMatrix>,
    names: Vec<String>,
    tags: Vec<BlockTag>,
}

impl Builder {
    fn push(&mut self, block: DenseMatrix, names: impl IntoIterator<Item = String>, tag: BlockTag) {
        let before = self.names.len();
        self.names.extend(names);
        debug_assert_eq!(self.names.len() - before, block.cols());
        self.tags.extend(std::iter::repeat_n(tag, block.cols()));
        self.blocks.push(block);
    }

    fn push_scores(&mut self, model: &Option<TsvdModel>, input: &DenseMatrix, tag: BlockTag) -> Result<(), FeatureError> {
        if let Some(m) = model {
            let scores = apply_tsvd(m, input)?;
            let names = (0..m.k()).map(|i| format!("{}_svd_{i}", m.fitted_block));
            self.push(scores, names, tag);
        }
        Ok(())
    }
}

/// Builds the feature matrix for `tier`. Column order is fixed: numeric
/// metadata, one-hot metadata, rcdc and rac scores, then concept scores (M2+)
/// and abstract scores (M3).
pub fn assemble(
    records: &[PublicationRecord],
    context: &FeatureContext,
    embeddings: Option<&EmbeddingMap>,
    tier: Tier,
) -> Result<FeatureMatrix, FeatureError> {
    let n = records.len();
    let mut b = Builder { blocks: Vec::new(), names: Vec::new(), tags: Vec::new() };

    let mut numeric = DenseMatrix::zeros(n, NUMERIC_COLUMNS.len());
    for (i, r) in records.iter().enumerate() {
        numeric.row_mut(i).copy_from_slice(&[
            f64::from(r.reference_ids_count),
            f64::from(r.authors_count),
            f64::from(r.research_org_count()),
            f64::from(r.research_org_country_count()),
            hash_id(&r.first_author_id),
            hash_id(&r.first_author_affiliation_id),
            hash_id(&r.journal_id),
        ]);
    }
    b.push(numeric, NUMERIC_COLUMNS.iter().map(|s| s.to_string()), BlockTag::Metadata);

    for field in ONE_HOT_FIELDS {
        let block = one_hot(records, &context.vocab, field)?;
        let cats = context.vocab.categories(field).unwrap_or_default();
        b.push(block, cats.iter().map(|c| format!("{field}={c}")), BlockTag::Metadata);
    }
    b.push_scores(&context.rcdc, &one_hot(records, &context.vocab, CategoricalField::CategoryRcdc)?, BlockTag::Metadata)?;
    b.push_scores(&context.rac, &one_hot(records, &context.vocab, CategoricalField::CategoryHracsRac)?, BlockTag::Metadata)?;

    if tier.includes(BlockTag::Concepts) {
        b.push_scores(&context.concepts, &one_hot(records, &context.vocab, CategoricalField::Concepts)?, BlockTag::Concepts)?;
    }
    if tier.includes(BlockTag::Abstract) {
        let model = context.abstract_embedding.as_ref().ok_or(FeatureError::NotFitted("abstract"))?;
        let map = match embeddings {
            Some(m) => m,
            None if n == 0 => &EmbeddingMap::new(),
            None => return Err(FeatureError::MissingEmbedding(records[0].id.clone())),
        };
        let block = embedding_block(records, map, Some(model.input_width()))?;
        b.push_scores(&context.abstract_embedding, &block, BlockTag::Abstract)?;
    }

    let refs: Vec<&DenseMatrix> = b.blocks.iter().collect();
    Ok(FeatureMatrix {
        values: DenseMatrix::hstack(&refs),
        column_names: b.names,
        column_blocks: b.tags,
        tier,
        row_ids: records.iter().map(|r| r.id.clone()).collect(),
    })
}
