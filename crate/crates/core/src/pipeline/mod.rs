//! Stage orchestration over a run directory.
//!
//! Layout under `out/`:
//!
//! ```text
//! synth/      corpus.jsonl
//! ingest/     filtered.jsonl split_manifest.json filter_report.json stats.json
//! featurize/  context.json <tier>/{train.csv,test.csv,features.json}
//! train/      <tier>/{model.json,training.json}
//! eval/       <tier>/{report.json,roc.csv,pr.csv}
//! temporal/   delta_labels.csv decades.json delta.svg
//! report/     roc_overlay.svg pr_overlay.svg tables.md
//! ```
//!
//! Each stage writes only inside its own directory, finishing with a
//! `stage.json` that lists SHA-256 digests of its files. JSON, CSV, SVG and
//! Markdown artifacts also embed the provenance block themselves. Nothing
//! written depends on wall-clock time, so equal profiles give equal bytes.

mod profile;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

pub use profile::{CorpusSection, ExperimentProfile, Overrides, SamplingSection};
pub use stages::{
    run_eval, run_featurize, run_ingest, run_pipeline, run_report, run_synth, run_temporal, run_train, IngestStats,
    RunSummary, TemporalSummary, TierReport, TrainingSummary,
};

use crate::corpus::CorpusError;
use crate::embed::EmbedError;
use crate::eval::EvalError;
use crate::features::{FeatureError, LeakageViolation};
use crate::gbdt::GbdtError;
use crate::sampling::SamplingError;
use crate::temporal::TemporalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Synth,
    Ingest,
    Featurize,
    Train,
    Eval,
    Temporal,
    Report,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::Featurize => "featurize",
            Stage::Train => "train",
            Stage::Eval => "eval",
            Stage::Temporal => "temporal",
            Stage::Report => "report",
        }
    }

    /// Bumped whenever a stage's output format or semantics change.
    pub fn version(self) -> u32 {
        1
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error("missing artifact from stage `{stage}`: {path}")]
    MissingArtifact { stage: Stage, path: PathBuf },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Gbdt(#[from] GbdtError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Leakage(#[from] LeakageViolation),
    /// Artifacts from different runs or hand edits that do not fit together.
    #[error("inconsistent artifacts: {0}")]
    Inconsistent(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: StageError,
    },
}

impl PipelineError {
    /// 0 success, 2 configuration, 3 data, 4 external service.
    pub fn exit_code(&self) -> i32 {
        let PipelineError::Stage { source, .. } = self else { return 2 };
        match source {
            StageError::Corpus(CorpusError::ConfigError(_))
            | StageError::Sampling(SamplingError::ConfigError(_))
            | StageError::Gbdt(GbdtError::ConfigError(_))
            | StageError::Embed(EmbedError::ConfigError(_)) => 2,
            StageError::Embed(EmbedError::EmbeddingServiceError { .. } | EmbedError::DimensionMismatch { .. }) => 4,
            _ => 3,
        }
    }

    /// The prerequisite stage whose output was absent, if that was the failure.
    pub fn missing_artifact(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { source: StageError::MissingArtifact { stage, .. }, .. } => Some(*stage),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub profile: String,
    pub profile_hash: String,
    pub seed: u64,
    pub stage: Stage,
    pub stage_version: u32,
    pub tool_version: String,
}

impl Provenance {
    /// One-line form for CSV, SVG and Markdown comments.
    pub fn line(&self) -> String {
        format!(
            "provenance profile={} profile_hash={} seed={} stage={} stage_version={} tool_version={}",
            self.profile, self.profile_hash, self.seed, self.stage, self.stage_version, self.tool_version
        )
    }
}

/// A JSON artifact: the payload under `data` next to its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub provenance: Provenance,
    pub data: T,
}

/// Resolved profile plus the run directory it writes to.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub profile: ExperimentProfile,
    pub out: PathBuf,
    profile_hash: String,
}

impl RunContext {
    pub fn new(profile: ExperimentProfile, out: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        profile.validate()?;
        let profile_hash = profile.hash();
        Ok(Self { profile, out: out.into(), profile_hash })
    }

    pub fn profile_hash(&self) -> &str {
        &self.profile_hash
    }

    pub fn provenance(&self, stage: Stage) -> Provenance {
        Provenance {
            profile: self.profile.name.clone(),
            profile_hash: self.profile_hash.clone(),
            seed: self.profile.seed,
            stage,
            stage_version: stage.version(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.out.join(stage.as_str())
    }

    /// Corpus the ingest stage reads.
    pub fn corpus_path(&self) -> PathBuf {
        match &self.profile.corpus.path {
            Some(p) => p.clone(),
            None => self.stage_dir(Stage::Synth).join("corpus.jsonl"),
        }
    }

    pub fn embedding_cache_path(&self) -> PathBuf {
        if let Some(p) = &self.profile.corpus.embedding_cache {
            return p.clone();
        }
        match &self.profile.corpus.path {
            Some(p) => {
                let mut s = p.clone().into_os_string();
                s.push(".embeddings.jsonl");
                PathBuf::from(s)
            }
            // A generated corpus lives in synth/, which later stages must not touch.
            None => self.stage_dir(Stage::Featurize).join("embeddings.jsonl"),
        }
    }
}

fn io_err(path: &Path, e: impl ToString) -> StageError {
    StageError::Io { path: path.to_path_buf(), message: e.to_string() }
}

pub(crate) fn create_dir(path: &Path) -> Result<(), StageError> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), StageError> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StageError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    s.push('\n');
    write_text(path, &s)
}

/// Reads an artifact written by `producer`; absence is a missing-artifact error.
pub(crate) fn read_json<T: DeserializeOwned>(path: &Path, producer: Stage) -> Result<T, StageError> {
    let text = read_required(path, producer)?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

pub(crate) fn require(path: &Path, producer: Stage) -> Result<(), StageError> {
    if path.exists() {
        Ok(())
    } else {
        Err(StageError::MissingArtifact { stage: producer, path: path.to_path_buf() })
    }
}

pub(crate) fn read_required(path: &Path, producer: Stage) -> Result<String, StageError> {
    require(path, producer)?;
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Writes `<stage>/stage.json` with digests of the listed files, which are
/// given relative to the stage directory.
pub(crate) fn seal_stage(ctx: &RunContext, stage: Stage, files: &[String]) -> Result<(), StageError> {
    let dir = ctx.stage_dir(stage);
    let mut digests = BTreeMap::new();
    for f in files {
        let p = dir.join(f);
        let bytes = std::fs::read(&p).map_err(|e| io_err(&p, e))?;
        digests.insert(f.clone(), crate::util::sha256_hex(&bytes));
    }
    write_json(&dir.join("stage.json"), &Artifact { provenance: ctx.provenance(stage), data: digests })
}
