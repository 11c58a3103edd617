use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::{check_texts, EmbedRole, Embedding, EmbeddingCache, EmbeddingProvider, MIN_DIMENSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub token: Option<String>,
    pub dimension: usize,
    pub batch_size: usize,
    pub timeout: Duration,
    pub retries: u32,
    /// Maximum number of batches in flight at once.
    pub parallelism: usize,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
    role: EmbedRole,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Embedding endpoint speaking `POST {"texts": [...], "role": ...}` →
/// `{"vectors": [[...], ...]}`.
pub struct RemoteProvider {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
    cache: Option<EmbeddingCache>,
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        if config.dimension < MIN_DIMENSION {
            return Err(Error::InvalidConfig(format!(
                "embedding dimension must be >= {MIN_DIMENSION}"
            )));
        }
        if config.batch_size == 0 || config.parallelism == 0 {
            return Err(Error::InvalidConfig(
                "batch_size and parallelism must be >= 1".into(),
            ));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| Error::provider(e.to_string(), false))?;
        Ok(Self {
            config,
            client,
            cache: None,
        })
    }

    pub fn with_cache(mut self, cache: EmbeddingCache) -> Self {
        self.cache = Some(cache);
        self
    }

    fn post_batch(&self, texts: &[String], role: EmbedRole) -> Result<Vec<Embedding>> {
        let mut req = self
            .client
            .post(&self.config.endpoint)
            .json(&EmbedRequest { texts, role });
        if let Some(token) = &self.config.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| Error::provider(e.to_string(), true))?;
        let status = resp.status();
        if !status.is_success() {
            let retryable = status.is_server_error() || status.as_u16() == 429;
            return Err(Error::provider(
                format!("embedding endpoint returned {status}"),
                retryable,
            ));
        }
        let body: EmbedResponse = resp
            .json()
            .map_err(|e| Error::provider(format!("bad embedding response: {e}"), false))?;
        if body.vectors.len() != texts.len() {
            return Err(Error::provider(
                format!(
                    "sent {} texts, received {} vectors",
                    texts.len(),
                    body.vectors.len()
                ),
                false,
            ));
        }
        body.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.config.dimension {
                    return Err(Error::DimensionDrift {
                        expected: self.config.dimension,
                        found: v.len(),
                    });
                }
                Embedding::normalized(v)
            })
            .collect()
    }

    fn post_with_retry(&self, texts: &[String], role: EmbedRole) -> Result<Vec<Embedding>> {
        let mut attempt = 0;
        loop {
            match self.post_batch(texts, role) {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && attempt < self.config.retries => {
                    attempt += 1;
                    warn!("embedding request failed ({e}); retry {attempt}");
                    std::thread::sleep(Duration::from_millis(50 * (1 << attempt.min(6))));
                }
                Err(e) => return Err(e),
            }
        }
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn dimension(&self) -> usize {
        self.config.dimension
    }

    fn embed_texts(&self, texts: &[String], role: EmbedRole) -> Result<Vec<Embedding>> {
        check_texts(texts)?;
        let mut out: Vec<Option<Embedding>> = vec![None; texts.len()];
        let mut missing: Vec<usize> = Vec::new();
        for (i, t) in texts.iter().enumerate() {
            match self.cache.as_ref().and_then(|c| c.get(t, role)) {
                Some(v) => out[i] = Some(v),
                None => missing.push(i),
            }
        }
        debug!(
            "remote embed: {} texts, {} cache misses",
            texts.len(),
            missing.len()
        );

        let batches: Vec<&[usize]> = missing.chunks(self.config.batch_size).collect();
        for wave in batches.chunks(self.config.parallelism) {
            let results: Vec<Result<Vec<Embedding>>> = std::thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|batch| {
                        let batch_texts: Vec<String> =
                            batch.iter().map(|&i| texts[i].clone()).collect();
                        s.spawn(move || self.post_with_retry(&batch_texts, role))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("embedding worker panicked"))
                    .collect()
            });
            for (batch, result) in wave.iter().zip(results) {
                for (&i, v) in batch.iter().zip(result?) {
                    if let Some(cache) = &self.cache {
                        cache.insert(&texts[i], role, &v)?;
                    }
                    out[i] = Some(v);
                }
            }
        }
        Ok(out.into_iter().map(|v| v.expect("every slot filled")).collect())
    }

    fn fingerprint(&self) -> String {
        format!("remote:{}:d={}", self.config.endpoint, self.config.dimension)
    }
}
