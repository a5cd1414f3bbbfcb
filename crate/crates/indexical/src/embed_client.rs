//! Minimal batching client for a text-embedding endpoint.
//!
//! Protocol: `POST {"texts": [s, ...]}` returns `{"embeddings": [[f, ...], ...]}`
//! with one vector per input text, in order. Vendor APIs with different
//! shapes are expected to sit behind a thin proxy.
//!
//! Batches are retried with exponential backoff; a batch that still fails
//! aborts the fetch and reports its index. The bearer token, when needed,
//! comes from the `INDEXICAL_TOKEN` environment variable.

use std::time::Duration;

use serde::Deserialize;

use crate::corpus::{EmbeddingStore, EmbeddingVector};
use crate::error::Error;
use crate::Result;

/// Environment variable holding the bearer token.
pub const TOKEN_ENV: &str = "INDEXICAL_TOKEN";

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub endpoint: String,
    pub batch_size: usize,
    /// Total attempts per batch (first try plus retries).
    pub max_attempts: usize,
    /// Backoff before retry k is `retry_delay * 2^(k-1)`.
    pub retry_delay: Duration,
    pub token: Option<String>,
}

impl FetchConfig {
    pub fn new(endpoint: String, batch_size: usize) -> Self {
        FetchConfig {
            endpoint,
            batch_size,
            max_attempts: 3,
            retry_delay: Duration::from_millis(500),
            token: std::env::var(TOKEN_ENV).ok(),
        }
    }
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
}

/// Fetch embeddings for `(id, text)` pairs, preserving input order.
pub fn fetch_embeddings(texts: &[(String, String)], config: &FetchConfig) -> Result<EmbeddingStore> {
    if config.batch_size == 0 {
        return Err(Error::validation("batch size must be >= 1"));
    }
    if config.max_attempts == 0 {
        return Err(Error::validation("max attempts must be >= 1"));
    }
    let agent = ureq::Agent::from(
        ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build(),
    );

    let mut store = EmbeddingStore::new();
    for (batch_index, batch) in texts.chunks(config.batch_size).enumerate() {
        let payload: Vec<&str> = batch.iter().map(|(_, text)| text.as_str()).collect();
        let vectors = post_batch(&agent, config, batch_index, &payload)?;
        if vectors.len() != batch.len() {
            return Err(Error::Protocol(format!(
                "batch {batch_index}: sent {} texts, received {} embeddings",
                batch.len(),
                vectors.len()
            )));
        }
        for ((id, _), values) in batch.iter().zip(vectors) {
            store.insert(EmbeddingVector { id: id.clone(), values })?;
        }
    }
    Ok(store)
}

fn post_batch(
    agent: &ureq::Agent,
    config: &FetchConfig,
    batch_index: usize,
    texts: &[&str],
) -> Result<Vec<Vec<f64>>> {
    let body = serde_json::json!({ "texts": texts });
    let mut last_error = String::new();
    for attempt in 1..=config.max_attempts {
        if attempt > 1 {
            let backoff = config.retry_delay * 2u32.pow(attempt as u32 - 2);
            eprintln!(
                "indexical: batch {batch_index} attempt {attempt}/{} after {last_error}; retrying in {backoff:?}",
                config.max_attempts
            );
            std::thread::sleep(backoff);
        }
        let mut request = agent.post(&config.endpoint);
        if let Some(token) = &config.token {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        match request.send_json(&body) {
            Ok(mut response) => {
                let parsed: EmbedResponse = response
                    .body_mut()
                    .read_json()
                    .map_err(|e| Error::Protocol(format!("batch {batch_index}: bad response body: {e}")))?;
                return Ok(parsed.embeddings);
            }
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(Error::Http(format!(
        "batch {batch_index} failed after {} attempts: {last_error}",
        config.max_attempts
    )))
}
