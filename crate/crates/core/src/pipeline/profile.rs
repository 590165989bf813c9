//! Experiment profiles: one TOML file per experiment, overridable by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusFilterConfig, LabelKind, SynthConfig};
use crate::embed::{EmbedMode, EmbedderConfig};
use crate::features::{FeatureConfig, Tier};
use crate::gbdt::GbdtConfig;
use crate::sampling::SplitConfig;
use crate::temporal::TemporalConfig;
use crate::util;

use super::PipelineError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    /// JSON-lines record file. Relative paths resolve against the profile's
    /// directory. Unset means the corpus comes from the `synth` stage.
    pub path: Option<PathBuf>,
    pub strict: bool,
    /// Embedding cache file; defaults to `<corpus>.embeddings.jsonl`.
    pub embedding_cache: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub train_fraction: f64,
    /// Unset takes the label's default (patents 0.15, trials 0.05).
    pub downsample_keep: Option<f64>,
    pub stratified: bool,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self { train_fraction: 0.75, downsample_keep: None, stratified: false }
    }
}

fn all_tiers() -> Vec<Tier> {
    Tier::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentProfile {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub label: LabelKind,
    #[serde(default = "all_tiers")]
    pub tiers: Vec<Tier>,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    #[serde(default)]
    pub filter: CorpusFilterConfig,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub gbdt: GbdtConfig,
    #[serde(default)]
    pub embedder: EmbedderConfig,
    #[serde(default)]
    pub temporal: TemporalConfig,
}

/// Command-line values that replace profile values when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tiers: Option<Vec<Tier>>,
    pub label: Option<LabelKind>,
    pub embed_mode: Option<EmbedMode>,
    pub strict: Option<bool>,
}

impl ExperimentProfile {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a profile and resolves its relative paths against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read profile {}: {e}", path.display())))?;
        let mut p = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |q: &mut Option<PathBuf>| {
            if let Some(x) = q.as_mut() {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        resolve(&mut p.corpus.path);
        resolve(&mut p.corpus.embedding_cache);
        Ok(p)
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = &o.tiers {
            self.tiers = t.clone();
        }
        if let Some(l) = o.label {
            self.label = l;
        }
        if let Some(m) = o.embed_mode {
            self.embedder.mode = m;
        }
        if let Some(s) = o.strict {
            self.corpus.strict = s;
        }
        self.tiers.sort();
        self.tiers.dedup();
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg = |e: &dyn std::fmt::Display| PipelineError::Config(e.to_string());
        if self.name.trim().is_empty() {
            return Err(PipelineError::Config("profile name is empty".into()));
        }
        if self.tiers.is_empty() {
            return Err(PipelineError::Config("no model tier selected".into()));
        }
        if self.corpus.path.is_none() && self.synth.is_none() {
            return Err(PipelineError::Config("profile needs corpus.path or a [synth] section".into()));
        }
        if let Some(s) = &self.synth {
            s.validate().map_err(|e| cfg(&e))?;
        }
        self.filter.validate().map_err(|e| cfg(&e))?;
        self.split_config().validate().map_err(|e| cfg(&e))?;
        self.gbdt.validate().map_err(|e| cfg(&e))?;
        self.embedder.validate().map_err(|e| cfg(&e))?;
        let t = &self.temporal;
        if t.year_min > t.year_max {
            return Err(PipelineError::Config("temporal.year_min exceeds temporal.year_max".into()));
        }
        if let Some(tier) = t.tier {
            if !self.tiers.contains(&tier) {
                return Err(PipelineError::Config(format!("temporal tier {tier} is not among the profile's tiers")));
            }
        }
        Ok(())
    }

    pub fn split_config(&self) -> SplitConfig {
        let mut c = SplitConfig::for_kind(self.label);
        c.train_fraction = self.sampling.train_fraction;
        if let Some(k) = self.sampling.downsample_keep {
            c.downsample_keep = k;
        }
        c.stratified = self.sampling.stratified;
        c.seed = self.seed;
        c
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig { seed: self.seed, ..self.features.clone() }
    }

    pub fn gbdt_config(&self) -> GbdtConfig {
        GbdtConfig { seed: self.seed, ..self.gbdt.clone() }
    }

    /// Tier audited by the temporal stage.
    pub fn temporal_tier(&self) -> Tier {
        self.temporal.tier.unwrap_or_else(|| *self.tiers.iter().max().expect("validated non-empty"))
    }

    /// SHA-256 of the canonical JSON form. Every artifact records it.
    pub fn hash(&self) -> String {
        util::sha256_hex(serde_json::to_string(self).expect("profile serializes").as_bytes())
    }
}
