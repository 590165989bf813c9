use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{truncate_abstract, EmbedError, EmbedMode, EmbedderConfig, EmbeddingVector};
use crate::util::sha256_hex;

/// Cache key over (truncated content, model identity, dimension).
pub fn cache_key(text: &str, config: &EmbedderConfig) -> String {
    let model = match config.mode {
        EmbedMode::Remote => config.model_name.clone(),
        EmbedMode::Local => format!("local-hash-v1/seed={}", config.seed),
    };
    let content = truncate_abstract(text, config.max_chars);
    sha256_hex(format!("{model}\u{0}{}\u{0}{content}", config.dimension).as_bytes())
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    embedding: EmbeddingVector,
}

/// JSON-lines embedding store, written in key order.
#[derive(Debug, Default)]
pub struct EmbeddingCache {
    path: Option<PathBuf>,
    entries: BTreeMap<String, EmbeddingVector>,
}

impl EmbeddingCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens the cache at `path`; a missing file is an empty cache.
    pub fn open(path: &Path) -> Result<Self, EmbedError> {
        let err = |message: String| EmbedError::Cache { path: path.to_path_buf(), message };
        let mut entries = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(|e| err(e.to_string()))?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| err(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let e: Entry = serde_json::from_str(&line).map_err(|e| err(format!("line {}: {e}", i + 1)))?;
                entries.insert(e.key, e.embedding);
            }
        }
        Ok(Self { path: Some(path.to_path_buf()), entries })
    }

    pub fn get(&self, key: &str) -> Option<&EmbeddingVector> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: String, v: EmbeddingVector) {
        self.entries.insert(key, v);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn save(&self) -> Result<(), EmbedError> {
        let Some(path) = &self.path else { return Ok(()) };
        let err = |message: String| EmbedError::Cache { path: path.clone(), message };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| err(e.to_string()))?;
        }
        let mut w = BufWriter::new(File::create(path).map_err(|e| err(e.to_string()))?);
        for (key, embedding) in &self.entries {
            let line = serde_json::to_string(&Entry { key: key.clone(), embedding: embedding.clone() })
                .map_err(|e| err(e.to_string()))?;
            writeln!(w, "{line}").map_err(|e| err(e.to_string()))?;
        }
        w.flush().map_err(|e| err(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{embed_with_cache, local_embed};

    #[test]
    fn key_depends_on_model_and_dimension() {
        let cfg = EmbedderConfig { mode: EmbedMode::Remote, ..Default::default() };
        let k = cache_key("abc", &cfg);
        assert_ne!(k, cache_key("abd", &cfg));
        assert_ne!(k, cache_key("abc", &EmbedderConfig { dimension: 8, ..cfg.clone() }));
        assert_ne!(k, cache_key("abc", &EmbedderConfig { model_name: "other".into(), ..cfg.clone() }));
        // Text beyond the budget does not change what is embedded.
        let short = EmbedderConfig { max_chars: 3, ..cfg.clone() };
        assert_eq!(cache_key("abc def", &short), cache_key("abc xyz", &short));
    }

    #[test]
    fn persisted_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let cfg = EmbedderConfig { dimension: 32, ..Default::default() };
        let texts = vec!["one two".to_string(), "three".to_string(), "one two".to_string()];
        let mut cache = EmbeddingCache::open(&path).unwrap();
        let first = embed_with_cache(&texts, &cfg, &mut cache).unwrap();
        assert_eq!(cache.len(), 2);
        assert_eq!(first[0], first[2]);
        assert_eq!(first[1], local_embed("three", 32, 0));
        cache.save().unwrap();

        let mut reopened = EmbeddingCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 2);
        let second = embed_with_cache(&texts, &cfg, &mut reopened).unwrap();
        assert_eq!(first, second);
    }
}
