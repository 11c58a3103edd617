//! Corpus files: one JSON object per line, `{"id", "title"?, "text"}`.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusPassage {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
}

impl CorpusPassage {
    /// The text that is embedded and shown to the extractor: the title on
    /// its own line, then the body.
    pub fn full_text(&self) -> String {
        match &self.title {
            Some(t) if !t.trim().is_empty() => format!("{t}\n{}", self.text),
            _ => self.text.clone(),
        }
    }
}

/// A line that could not be read as a passage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub passages: Vec<CorpusPassage>,
    pub skipped: Vec<SkippedLine>,
}

/// Parses JSONL records of type `T`, each paired with its 1-based line
/// number. Blank lines are ignored. Bad lines are collected, or fail the
/// whole read when `strict`.
pub fn read_jsonl<T, R>(reader: R, strict: bool) -> Result<(Vec<(usize, T)>, Vec<SkippedLine>)>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(&line) {
            Ok(v) => out.push((i + 1, v)),
            Err(e) if strict => {
                return Err(Error::InvalidRecord {
                    line: i + 1,
                    reason: e.to_string(),
                })
            }
            Err(e) => skipped.push(SkippedLine {
                line: i + 1,
                reason: e.to_string(),
            }),
        }
    }
    Ok((out, skipped))
}

pub fn parse_corpus<R: BufRead>(reader: R, strict: bool) -> Result<Corpus> {
    let (records, mut skipped) = read_jsonl::<CorpusPassage, _>(reader, strict)?;
    let mut seen = std::collections::HashSet::new();
    let mut passages = Vec::with_capacity(records.len());
    for (line, p) in records {
        let problem = if p.id.trim().is_empty() {
            Some("empty id".to_string())
        } else if p.text.trim().is_empty() {
            Some(format!("passage `{}` has empty text", p.id))
        } else if !seen.insert(p.id.clone()) {
            Some(format!("duplicate passage id `{}`", p.id))
        } else {
            None
        };
        match problem {
            Some(reason) if strict => return Err(Error::InvalidRecord { line, reason }),
            Some(reason) => skipped.push(SkippedLine { line, reason }),
            None => passages.push(p),
        }
    }
    skipped.sort_by_key(|s| s.line);
    for s in &skipped {
        log::warn!("corpus: skipping record {}: {}", s.line, s.reason);
    }
    if passages.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(Corpus { passages, skipped })
}

/// SHA-256 over `id NUL full_text LF` for each passage, in order.
pub fn corpus_hash(passages: &[CorpusPassage]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for p in passages {
        h.update(p.id.as_bytes());
        h.update([0u8]);
        h.update(p.full_text().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

pub fn read_corpus(path: &Path, strict: bool) -> Result<Corpus> {
    parse_corpus(BufReader::new(File::open(path)?), strict)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn title_is_prepended() {
        let p = CorpusPassage {
            id: "a".into(),
            title: Some("T".into()),
            text: "body".into(),
        };
        assert_eq!(p.full_text(), "T\nbody");
    }

    #[test]
    fn lenient_reading_skips_bad_lines() {
        let data = "{\"id\":\"a\",\"text\":\"x\"}\nnot json\n\n{\"id\":\"a\",\"text\":\"dup\"}\n{\"id\":\"b\",\"text\":\"y\"}\n";
        let c = parse_corpus(data.as_bytes(), false).unwrap();
        assert_eq!(c.passages.len(), 2);
        assert_eq!(c.skipped.len(), 2);
        assert_eq!(c.skipped[0].line, 2);
        assert!(parse_corpus(data.as_bytes(), true).is_err());
    }

    #[test]
    fn empty_corpus() {
        assert!(matches!(
            parse_corpus("\n\n".as_bytes(), false),
            Err(Error::EmptyCorpus)
        ));
    }
}
