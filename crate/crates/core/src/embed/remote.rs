//! Client for an embeddings web API.
//!
//! Wire format: `POST {"input": [..texts], "model": name}` answered by
//! `{"data": [{"index": i, "embedding": [..]}, ..]}`, authenticated with a
//! bearer token. Rate-limit (429) and server-error (5xx) responses, as well as
//! transport failures, are retried with exponential backoff.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{truncate_abstract, EmbedError, EmbedderConfig, EmbeddingVector};

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    input: &'a [&'a str],
    model: &'a str,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    index: usize,
    embedding: Vec<f64>,
}

pub struct RemoteEmbedder {
    agent: ureq::Agent,
    config: EmbedderConfig,
    token: String,
    attempts: AtomicU64,
}

impl RemoteEmbedder {
    /// Reads the bearer token from the environment variable named by
    /// `config.api_key_env`.
    pub fn from_config(config: &EmbedderConfig) -> Result<Self, EmbedError> {
        let token = std::env::var(&config.api_key_env).map_err(|_| {
            EmbedError::ConfigError(format!("environment variable {} is not set", config.api_key_env))
        })?;
        Self::new(config, token)
    }

    pub fn new(config: &EmbedderConfig, token: impl Into<String>) -> Result<Self, EmbedError> {
        config.validate()?;
        let agent_config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .build();
        Ok(Self {
            agent: ureq::Agent::new_with_config(agent_config),
            config: config.clone(),
            token: token.into(),
            attempts: AtomicU64::new(0),
        })
    }

    /// HTTP requests issued so far, retries included.
    pub fn attempts(&self) -> u64 {
        self.attempts.load(Ordering::Relaxed)
    }

    pub fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let truncated: Vec<&str> = texts.iter().map(|t| truncate_abstract(t, self.config.max_chars)).collect();
        let batches: Vec<(usize, &[&str])> = truncated
            .chunks(self.config.batch_size)
            .enumerate()
            .map(|(i, c)| (i * self.config.batch_size, c))
            .collect();
        let results: Mutex<Vec<Option<EmbeddingVector>>> = Mutex::new(vec![None; texts.len()]);
        let failure: Mutex<Option<EmbedError>> = Mutex::new(None);
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.min(batches.len());

        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    if failure.lock().expect("poisoned").is_some() {
                        return;
                    }
                    let job = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&(start, batch)) = batches.get(job) else { return };
                    match self.post_with_retry(batch) {
                        Ok(vectors) => {
                            let mut out = results.lock().expect("poisoned");
                            for (k, v) in vectors.into_iter().enumerate() {
                                out[start + k] = Some(v);
                            }
                        }
                        Err(e) => {
                            failure.lock().expect("poisoned").get_or_insert(e);
                            return;
                        }
                    }
                });
            }
        });

        if let Some(e) = failure.into_inner().expect("poisoned") {
            return Err(e);
        }
        Ok(results.into_inner().expect("poisoned").into_iter().map(|v| v.expect("every batch filled")).collect())
    }

    fn post_with_retry(&self, batch: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let retry = &self.config.retry;
        let mut attempt = 1;
        loop {
            let outcome = self.post_once(batch);
            let transient = matches!(&outcome, Err(Transient(_)));
            match outcome {
                Ok(v) => return Ok(v),
                Err(Transient(e)) | Err(Fatal(e)) if !transient || attempt >= retry.max_attempts => {
                    return Err(e)
                }
                Err(_) => {
                    let backoff = retry.base_backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                    thread::sleep(Duration::from_millis(backoff));
                    attempt += 1;
                }
            }
        }
    }

    fn post_once(&self, batch: &[&str]) -> Result<Vec<EmbeddingVector>, Failure> {
        self.attempts.fetch_add(1, Ordering::Relaxed);
        let body = EmbeddingRequest { input: batch, model: &self.config.model_name };
        let response = self
            .agent
            .post(&self.config.endpoint_url)
            .header("Authorization", &format!("Bearer {}", self.token))
            .send_json(&body);
        let mut response = match response {
            Ok(r) => r,
            Err(e) => {
                return Err(Transient(EmbedError::EmbeddingServiceError { status: 0, body: e.to_string() }))
            }
        };
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().unwrap_or_default();
        if status == 429 || status >= 500 {
            return Err(Transient(EmbedError::EmbeddingServiceError { status, body: text }));
        }
        if !(200..300).contains(&status) {
            return Err(Fatal(EmbedError::EmbeddingServiceError { status, body: text }));
        }
        let parsed: EmbeddingResponse = serde_json::from_str(&text)
            .map_err(|e| Fatal(EmbedError::EmbeddingServiceError { status, body: format!("{e}: {text}") }))?;
        let mut out: Vec<Option<EmbeddingVector>> = vec![None; batch.len()];
        for item in parsed.data {
            if item.embedding.len() != self.config.dimension {
                return Err(Fatal(EmbedError::DimensionMismatch {
                    expected: self.config.dimension,
                    got: item.embedding.len(),
                }));
            }
            let slot = out.get_mut(item.index).ok_or_else(|| {
                Fatal(EmbedError::EmbeddingServiceError { status, body: format!("index {} out of range", item.index) })
            })?;
            *slot = Some(EmbeddingVector::new(item.embedding).ok_or_else(|| {
                Fatal(EmbedError::EmbeddingServiceError { status, body: "non-finite embedding value".into() })
            })?);
        }
        out.into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| Fatal(EmbedError::EmbeddingServiceError { status, body: format!("no embedding for index {i}") }))
            })
            .collect()
    }
}

enum Failure {
    Transient(EmbedError),
    Fatal(EmbedError),
}
use Failure::{Fatal, Transient};
