use super::{check_texts, EmbedRole, Embedding, EmbeddingProvider, MIN_DIMENSION};
use crate::error::{Error, Result};

const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const BUCKET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
// Second, independent FNV stream for the sign bit.
const SIGN_BASIS: u64 = 0x84222325_cbf29ce4;

/// FNV-1a followed by the murmur3 64-bit finalizer. Raw FNV-1a reduced
/// modulo a power of two only sees the low bits of the state, which mix
/// poorly; the finalizer spreads every input bit over the whole word.
fn token_hash(basis: u64, bytes: &[u8]) -> u64 {
    let mut h = basis;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^ (h >> 33)
}

/// Lowercases a whitespace token and trims non-alphanumeric characters from
/// its ends. A token made only of punctuation is kept as lowercased.
pub(crate) fn mock_token(raw: &str) -> String {
    let lower = raw.to_lowercase();
    let trimmed = lower.trim_matches(|c: char| !c.is_alphanumeric());
    if trimmed.is_empty() {
        lower
    } else {
        trimmed.to_string()
    }
}

/// Deterministic hashed bag-of-tokens embedder.
///
/// Each token lands in bucket `token_hash(BUCKET_BASIS, token) % d` with
/// sign `+1` when the low bit of `token_hash(SIGN_BASIS, token)` is zero and
/// `-1` otherwise. Counts accumulate and the result is L2-normalized, so the
/// vector depends only on the token multiset: word order never matters and
/// shared tokens raise cosine similarity. The role hint is ignored.
#[derive(Debug, Clone)]
pub struct MockProvider {
    dimension: usize,
}

impl MockProvider {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension < MIN_DIMENSION {
            return Err(Error::InvalidConfig(format!(
                "embedding dimension must be >= {MIN_DIMENSION}, got {dimension}"
            )));
        }
        Ok(Self { dimension })
    }

    pub fn bucket_and_sign(&self, token: &str) -> (usize, f64) {
        let bucket = (token_hash(BUCKET_BASIS, token.as_bytes()) % self.dimension as u64) as usize;
        let sign = if token_hash(SIGN_BASIS, token.as_bytes()) & 1 == 0 {
            1.0
        } else {
            -1.0
        };
        (bucket, sign)
    }

    pub fn embed_text(&self, text: &str) -> Result<Embedding> {
        if text.trim().is_empty() {
            return Err(Error::EmptyInput("cannot embed an empty string"));
        }
        let mut acc = vec![0.0f64; self.dimension];
        for raw in text.split_whitespace() {
            let (bucket, sign) = self.bucket_and_sign(&mock_token(raw));
            acc[bucket] += sign;
        }
        if acc.iter().all(|&v| v == 0.0) {
            // Colliding tokens cancelled out; fall back to the whole text.
            let (bucket, _) = self.bucket_and_sign(text);
            acc[bucket] = 1.0;
        }
        Embedding::normalized(acc)
    }
}

impl EmbeddingProvider for MockProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_texts(&self, texts: &[String], _role: EmbedRole) -> Result<Vec<Embedding>> {
        check_texts(texts)?;
        texts.iter().map(|t| self.embed_text(t)).collect()
    }

    fn fingerprint(&self) -> String {
        format!("mock:hashed-bag-of-tokens:fnv1a-fmix64:d={}", self.dimension)
    }
}
