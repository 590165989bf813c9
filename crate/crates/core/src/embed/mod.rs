//! Fixed-width abstract embeddings from a remote embeddings service or a
//! deterministic local hashing embedder.

mod cache;
mod local;
mod remote;
mod truncate;

pub use cache::{cache_key, EmbeddingCache};
pub use local::local_embed;
pub use remote::RemoteEmbedder;
pub use truncate::truncate_abstract;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("embedding service error (status {status}): {body}")]
    EmbeddingServiceError { status: u16, body: String },
    #[error("embedding has {got} dimensions, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid embedder configuration: {0}")]
    ConfigError(String),
    #[error("embedding cache {path}: {message}")]
    Cache { path: std::path::PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Returns `None` when any entry is non-finite.
    pub fn new(values: Vec<f64>) -> Option<Self> {
        values.iter().all(|v| v.is_finite()).then_some(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn cosine(&self, other: &Self) -> f64 {
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        let n = self.norm() * other.norm();
        if n == 0.0 {
            0.0
        } else {
            dot / n
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMode {
    Remote,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryConfig {
    /// Total attempts per request, including the first.
    pub max_attempts: u32,
    pub base_backoff_ms: u64,
}

impl Default for RetryConfig {
    fn default() -> Self {
        Self { max_attempts: 5, base_backoff_ms: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderConfig {
    pub mode: EmbedMode,
    pub endpoint_url: String,
    pub model_name: String,
    pub dimension: usize,
    /// Character budget applied to every text before it is embedded.
    pub max_chars: usize,
    pub max_in_flight: usize,
    /// Texts per remote request.
    pub batch_size: usize,
    pub retry: RetryConfig,
    /// Environment variable holding the bearer token for remote mode.
    pub api_key_env: String,
    pub timeout_secs: u64,
    /// Seed for local mode.
    pub seed: u64,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            mode: EmbedMode::Local,
            endpoint_url: "https://api.openai.com/v1/embeddings".into(),
            model_name: "text-embedding-ada-002".into(),
            dimension: 1536,
            // ≈ 8k tokens at ~4 characters per token.
            max_chars: 30_000,
            max_in_flight: 8,
            batch_size: 16,
            retry: RetryConfig::default(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 60,
            seed: 0,
        }
    }
}

impl EmbedderConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |m: &str| Err(EmbedError::ConfigError(m.to_string()));
        if self.dimension == 0 {
            return bad("dimension must be positive");
        }
        if self.max_chars == 0 {
            return bad("max_chars must be positive");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.retry.max_attempts == 0 {
            return bad("retry.max_attempts must be at least 1");
        }
        Ok(())
    }
}

/// Embeds `texts` in order. Each text is truncated to `config.max_chars`
/// first; output `i` always corresponds to input `i`.
pub fn embed_batch(texts: &[String], config: &EmbedderConfig) -> Result<Vec<EmbeddingVector>, EmbedError> {
    config.validate()?;
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    match config.mode {
        EmbedMode::Local => Ok(texts
            .par_iter()
            .map(|t| local_embed(truncate_abstract(t, config.max_chars), config.dimension, config.seed))
            .collect()),
        EmbedMode::Remote => RemoteEmbedder::from_config(config)?.embed(texts),
    }
}

/// Like [`embed_batch`] but only sends texts whose key is missing from `cache`,
/// then stores the new vectors in it.
pub fn embed_with_cache(
    texts: &[String],
    config: &EmbedderConfig,
    cache: &mut EmbeddingCache,
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    let keys: Vec<String> = texts.iter().map(|t| cache_key(t, config)).collect();
    let mut seen = std::collections::BTreeSet::new();
    let mut missing: Vec<(String, String)> = Vec::new();
    for (k, t) in keys.iter().zip(texts) {
        if cache.get(k).is_none() && seen.insert(k.as_str()) {
            missing.push((k.clone(), t.clone()));
        }
    }
    let missing_texts: Vec<String> = missing.iter().map(|(_, t)| t.clone()).collect();
    let fresh = embed_batch(&missing_texts, config)?;
    for ((k, _), v) in missing.into_iter().zip(fresh) {
        cache.insert(k, v);
    }
    Ok(keys.iter().map(|k| cache.get(k).cloned().expect("cached above")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_empty_output() {
        assert!(embed_batch(&[], &EmbedderConfig::default()).unwrap().is_empty());
        let remote = EmbedderConfig { mode: EmbedMode::Remote, endpoint_url: "http://127.0.0.1:9".into(), ..Default::default() };
        assert!(embed_batch(&[], &remote).unwrap().is_empty());
    }

    #[test]
    fn local_mode_truncates_before_embedding() {
        let cfg = EmbedderConfig { dimension: 64, max_chars: 10, ..Default::default() };
        let out = embed_batch(&["alpha beta gamma delta".to_string()], &cfg).unwrap();
        assert_eq!(out[0], local_embed("alpha beta", 64, 0));
    }

    #[test]
    fn invalid_config() {
        let cfg = EmbedderConfig { dimension: 0, ..Default::default() };
        assert!(matches!(embed_batch(&["x".into()], &cfg), Err(EmbedError::ConfigError(_))));
    }
}
