//! Unit-norm embeddings and the providers that produce them.
//!
//! Every vector that leaves this module has L2 norm within [`NORM_TOLERANCE`]
//! of one and no non-finite components. Similarities are plain dot products
//! accumulated in `f64`.

mod cache;
mod mock;
mod remote;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cache::EmbeddingCache;
pub use mock::MockProvider;
pub use remote::{RemoteConfig, RemoteProvider};

/// Allowed deviation of an embedding's L2 norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Smallest dimension a provider may be configured with.
pub const MIN_DIMENSION: usize = 8;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Scales `values` to unit length.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("embedding has no components"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbedding("non-finite component".into()));
        }
        let norm = l2_norm(&values);
        if norm == 0.0 {
            return Err(Error::InvalidEmbedding("zero vector".into()));
        }
        for v in &mut values {
            *v /= norm;
        }
        Ok(Embedding(values))
    }

    /// Wraps a vector that is already unit-norm, checking the contract.
    pub fn from_unit(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("embedding has no components"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidEmbedding("non-finite component".into()));
        }
        let norm = l2_norm(&values);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidEmbedding(format!(
                "norm {norm} is not within {NORM_TOLERANCE} of 1"
            )));
        }
        Ok(Embedding(values))
    }

    /// Rounds every component to `f32` precision, the precision of the
    /// persisted embedding matrix.
    pub fn quantized(&self) -> Self {
        Embedding(self.0.iter().map(|&v| v as f32 as f64).collect())
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Embedding::from_unit(values)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

impl fmt::Debug for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Embedding(d={}, [", self.0.len())?;
        for (i, v) in self.0.iter().take(4).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v:.4}")?;
        }
        if self.0.len() > 4 {
            write!(f, ", ...")?;
        }
        write!(f, "])")
    }
}

fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Cosine similarity of two unit vectors.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            expected: a.dimension(),
            found: b.dimension(),
        });
    }
    Ok(dot(a.as_slice(), b.as_slice()).clamp(-1.0, 1.0))
}

/// Dot product for callers that have already checked dimensions.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Componentwise mean of `vectors`, re-normalized to unit length.
pub fn average_embedding<'a, I>(vectors: I) -> Result<Embedding>
where
    I: IntoIterator<Item = &'a Embedding>,
{
    let mut iter = vectors.into_iter();
    let first = iter
        .next()
        .ok_or(Error::EmptyInput("average of zero vectors"))?;
    let mut sum = first.as_slice().to_vec();
    let mut count = 1usize;
    for v in iter {
        if v.dimension() != sum.len() {
            return Err(Error::DimensionMismatch {
                expected: sum.len(),
                found: v.dimension(),
            });
        }
        for (s, x) in sum.iter_mut().zip(v.as_slice()) {
            *s += x;
        }
        count += 1;
    }
    let n = count as f64;
    for s in &mut sum {
        *s /= n;
    }
    // Antipodal inputs cancel to (numerically) nothing.
    if l2_norm(&sum) < 1e-12 {
        return Err(Error::ZeroMean);
    }
    Embedding::normalized(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedRole {
    Query,
    Document,
}

impl EmbedRole {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbedRole::Query => "query",
            EmbedRole::Document => "document",
        }
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;

    /// One unit-norm vector per input text, in input order.
    fn embed_texts(&self, texts: &[String], role: EmbedRole) -> Result<Vec<Embedding>>;

    /// Stable description recorded in index manifests.
    fn fingerprint(&self) -> String;

    fn embed_one(&self, text: &str, role: EmbedRole) -> Result<Embedding> {
        let mut out = self.embed_texts(&[text.to_string()], role)?;
        out.pop().ok_or(Error::EmptyInput("provider returned nothing"))
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Arc<P> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn embed_texts(&self, texts: &[String], role: EmbedRole) -> Result<Vec<Embedding>> {
        (**self).embed_texts(texts, role)
    }

    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}

pub(crate) fn check_texts(texts: &[String]) -> Result<()> {
    if texts.is_empty() {
        return Err(Error::EmptyInput("no texts to embed"));
    }
    if texts.iter().any(|t| t.trim().is_empty()) {
        return Err(Error::EmptyInput("cannot embed an empty string"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    /// Falls back to `PROPRAG_EMBED_URL` when unset.
    pub endpoint: Option<String>,
    /// Falls back to `PROPRAG_EMBED_TOKEN` when unset.
    pub token: Option<String>,
    pub dimension: usize,
    pub batch_size: usize,
    pub timeout_secs: u64,
    pub retries: u32,
    pub parallelism: usize,
    /// On-disk vector cache for the remote provider.
    pub cache_path: Option<String>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Mock,
            endpoint: None,
            token: None,
            dimension: 512,
            batch_size: 64,
            timeout_secs: 60,
            retries: 3,
            parallelism: 4,
            cache_path: None,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension < MIN_DIMENSION {
            return Err(Error::InvalidConfig(format!(
                "embedding dimension must be >= {MIN_DIMENSION}, got {}",
                self.dimension
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::InvalidConfig("parallelism must be >= 1".into()));
        }
        Ok(())
    }

    /// Instantiates the configured provider.
    pub fn build(&self) -> Result<Arc<dyn EmbeddingProvider>> {
        self.validate()?;
        match self.kind {
            ProviderKind::Mock => Ok(Arc::new(MockProvider::new(self.dimension)?)),
            ProviderKind::Remote => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .or_else(|| std::env::var("PROPRAG_EMBED_URL").ok())
                    .ok_or_else(|| {
                        Error::InvalidConfig(
                            "remote provider needs an endpoint (PROPRAG_EMBED_URL)".into(),
                        )
                    })?;
                let token = self
                    .token
                    .clone()
                    .or_else(|| std::env::var("PROPRAG_EMBED_TOKEN").ok());
                let mut remote = RemoteProvider::new(RemoteConfig {
                    endpoint,
                    token,
                    dimension: self.dimension,
                    batch_size: self.batch_size,
                    timeout: std::time::Duration::from_secs(self.timeout_secs),
                    retries: self.retries,
                    parallelism: self.parallelism,
                })?;
                if let Some(path) = &self.cache_path {
                    remote = remote.with_cache(EmbeddingCache::open(path, self.dimension)?);
                }
                Ok(Arc::new(remote))
            }
        }
    }
}
