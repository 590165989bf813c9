//! Majority-class downsampling and the train/test split.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabelKind, LabeledDataset};
use crate::util;

const DOWNSAMPLE_STREAM: u64 = 0x646f_776e;
const SPLIT_STREAM: u64 = 0x7370_6c74;

#[derive(Debug, thiserror::Error)]
pub enum SamplingError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid split configuration: {0}")]
    ConfigError(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_fraction: f64,
    /// Fraction of the majority class kept.
    pub downsample_keep: f64,
    pub seed: u64,
    /// Split each class separately so both partitions keep the class ratio.
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self::for_kind(LabelKind::Patents)
    }
}

impl SplitConfig {
    /// Keeps 15% of negatives for patents and 5% for trials.
    pub fn for_kind(kind: LabelKind) -> Self {
        let downsample_keep = match kind {
            LabelKind::Patents => 0.15,
            LabelKind::Trials => 0.05,
        };
        Self { train_fraction: 0.75, downsample_keep, seed: 0, stratified: false }
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(SamplingError::ConfigError(format!("train_fraction {} not in (0, 1)", self.train_fraction)));
        }
        if !(self.downsample_keep > 0.0 && self.downsample_keep <= 1.0) {
            return Err(SamplingError::ConfigError(format!("downsample_keep {} not in (0, 1]", self.downsample_keep)));
        }
        Ok(())
    }
}

/// Number of majority records kept: ceil(n × keep). The small tolerance keeps
/// products like 100 × 0.07 = 7.000000000000001 from rounding up.
pub fn retained_count(n_majority: usize, keep: f64) -> usize {
    ((n_majority as f64 * keep) - 1e-9).ceil().max(0.0) as usize
}

/// Keeps every minority record and a seeded uniform sample of
/// `retained_count(N_majority, keep)` majority records, in input order.
/// Equal class sizes leave the dataset unchanged.
pub fn downsample_majority(dataset: &LabeledDataset, keep: f64, seed: u64) -> Result<LabeledDataset, SamplingError> {
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(SamplingError::ConfigError(format!("keep {keep} not in (0, 1]")));
    }
    let (pos, neg) = (dataset.positives(), dataset.negatives());
    if pos == 0 || neg == 0 {
        return Err(SamplingError::DegenerateInput(format!("{pos} positives and {neg} negatives")));
    }
    if pos == neg {
        return Ok(dataset.clone());
    }
    let majority = u8::from(pos > neg);
    let major_idx: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels[i] == majority).collect();
    let keep_n = retained_count(major_idx.len(), keep);
    let mut rng = util::rng(seed, DOWNSAMPLE_STREAM);
    let mut kept = vec![false; dataset.len()];
    for j in index::sample(&mut rng, major_idx.len(), keep_n) {
        kept[major_idx[j]] = true;
    }
    let idx: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels[i] != majority || kept[i]).collect();
    Ok(dataset.select(&idx))
}

/// Seeded random partition with |train| = round(n × train_fraction); both
/// partitions keep input order.
pub fn train_test_split(dataset: &LabeledDataset, config: &SplitConfig) -> (LabeledDataset, LabeledDataset) {
    let mut rng = util::rng(config.seed, SPLIT_STREAM);
    let mut in_train = vec![false; dataset.len()];
    let groups: Vec<Vec<usize>> = if config.stratified {
        (0..=1u8).map(|c| (0..dataset.len()).filter(|&i| dataset.labels[i] == c).collect()).collect()
    } else {
        vec![(0..dataset.len()).collect()]
    };
    for g in groups {
        let n_train = (g.len() as f64 * config.train_fraction).round() as usize;
        for j in index::sample(&mut rng, g.len(), n_train.min(g.len())) {
            in_train[g[j]] = true;
        }
    }
    let train: Vec<usize> = (0..dataset.len()).filter(|&i| in_train[i]).collect();
    let test: Vec<usize> = (0..dataset.len()).filter(|&i| !in_train[i]).collect();
    (dataset.select(&train), dataset.select(&test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMember {
    pub id: String,
    pub label: u8,
}

/// Enough to rebuild a split exactly: settings plus member ids in row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub kind: LabelKind,
    pub seed: u64,
    pub downsample_keep: f64,
    pub train_fraction: f64,
    pub stratified: bool,
    pub train: Vec<SplitMember>,
    pub test: Vec<SplitMember>,
}

impl SplitManifest {
    pub fn new(config: &SplitConfig, train: &LabeledDataset, test: &LabeledDataset) -> Self {
        let members = |d: &LabeledDataset| {
            d.records.iter().zip(&d.labels).map(|(r, &label)| SplitMember { id: r.id.clone(), label }).collect()
        };
        Self {
            kind: train.kind,
            seed: config.seed,
            downsample_keep: config.downsample_keep,
            train_fraction: config.train_fraction,
            stratified: config.stratified,
            train: members(train),
            test: members(test),
        }
    }
}
