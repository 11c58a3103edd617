use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbedRole, Embedding};
use crate::error::{Error, Result};

/// Append-only on-disk cache from content hash to vector.
///
/// One JSON object per line: `{"key": "<sha256 hex>", "vector": [...]}` where
/// the key hashes `role || 0x00 || text`. Later lines win on reload. Writes
/// go through a mutex so concurrent batches never interleave lines.
pub struct EmbeddingCache {
    path: PathBuf,
    dimension: usize,
    state: Mutex<CacheState>,
}

struct CacheState {
    entries: HashMap<String, Embedding>,
    file: File,
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    vector: Vec<f64>,
}

impl EmbeddingCache {
    pub fn open(path: impl AsRef<Path>, dimension: usize) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheLine =
                    serde_json::from_str(&line).map_err(|e| Error::InvalidRecord {
                        line: i + 1,
                        reason: e.to_string(),
                    })?;
                if rec.vector.len() != dimension {
                    return Err(Error::DimensionMismatch {
                        expected: dimension,
                        found: rec.vector.len(),
                    });
                }
                entries.insert(rec.key, Embedding::from_unit(rec.vector)?);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            path,
            dimension,
            state: Mutex::new(CacheState { entries, file }),
        })
    }

    pub fn key(text: &str, role: EmbedRole) -> String {
        let mut h = Sha256::new();
        h.update(role.as_str().as_bytes());
        h.update([0u8]);
        h.update(text.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn get(&self, text: &str, role: EmbedRole) -> Option<Embedding> {
        let state = self.state.lock().expect("cache lock poisoned");
        state.entries.get(&Self::key(text, role)).cloned()
    }

    pub fn insert(&self, text: &str, role: EmbedRole, vector: &Embedding) -> Result<()> {
        if vector.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: vector.dimension(),
            });
        }
        let key = Self::key(text, role);
        let mut state = self.state.lock().expect("cache lock poisoned");
        if state.entries.contains_key(&key) {
            return Ok(());
        }
        let line = serde_json::to_string(&CacheLine {
            key: key.clone(),
            vector: vector.as_slice().to_vec(),
        })?;
        writeln!(state.file, "{line}")?;
        state.entries.insert(key, vector.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("cache lock poisoned").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
