//! Offline decomposition of passages into entities and propositions.

mod llm;
mod parse;
mod prompts;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use llm::{CachedLlm, ChatClient, ChatConfig, Completion, LlmClient};
pub(crate) use llm::now_secs;
pub use parse::{
    first_json_object, parse_entity_response, parse_proposition_response, ExtractedProposition,
    ParseDiagnostics, ParsedPropositions,
};
pub use prompts::{
    entities_json_list, render_entity_prompt, render_proposition_prompt, PromptName,
    PromptTemplate,
};

use crate::corpus::{read_jsonl, CorpusPassage};
use crate::error::{Error, Result};
use crate::normalize::entity_key;

/// Where an extraction record came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum RecordProvenance {
    Llm { model: String, timestamp: u64 },
    Fixture { file: String },
}

/// The entities and propositions extracted from one passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub passage_id: String,
    pub entities: Vec<String>,
    pub propositions: Vec<ExtractedProposition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<RecordProvenance>,
}

impl ExtractionRecord {
    /// Checks that every proposition is non-empty and only mentions listed
    /// entities.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.passage_id.trim().is_empty() {
            return Err("empty passage_id".into());
        }
        let keys: std::collections::HashSet<String> =
            self.entities.iter().map(|e| entity_key(e)).collect();
        for p in &self.propositions {
            if p.text.trim().is_empty() {
                return Err(format!("{}: empty proposition text", self.passage_id));
            }
            if p.entities.is_empty() {
                return Err(format!("{}: proposition without entities", self.passage_id));
            }
            if let Some(e) = p.entities.iter().find(|e| !keys.contains(&entity_key(e))) {
                return Err(format!(
                    "{}: proposition entity `{e}` is not in the entity list",
                    self.passage_id
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExtractionConfig {
    /// Replies longer than this are rejected without parsing.
    pub max_response_bytes: usize,
    /// Extra attempts after a retryable provider error.
    pub retries: u32,
    /// Passages processed concurrently.
    pub parallelism: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            max_response_bytes: 64 * 1024,
            retries: 2,
            parallelism: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassageFailure {
    pub passage_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    /// Successful records, ascending by passage id.
    pub records: Vec<ExtractionRecord>,
    pub failures: Vec<PassageFailure>,
    pub diagnostics: ParseDiagnostics,
    /// (passage id, entity) pairs whose entity does not occur in the
    /// passage text. They are kept.
    pub unanchored_entities: Vec<(String, String)>,
}

fn complete_checked(
    llm: &dyn LlmClient,
    prompt: &str,
    config: &ExtractionConfig,
) -> Result<Completion> {
    let mut attempt = 0;
    loop {
        match llm.complete(prompt) {
            Ok(c) if c.text.len() > config.max_response_bytes => {
                return Err(Error::ResponseTooLong {
                    len: c.text.len(),
                    max: config.max_response_bytes,
                })
            }
            Ok(c) => return Ok(c),
            Err(e) if e.is_retryable() && attempt < config.retries => {
                attempt += 1;
                log::warn!("LLM call failed ({e}); retry {attempt}");
            }
            Err(e) => return Err(e),
        }
    }
}

/// Runs entity extraction, then proposition extraction, for one passage.
pub fn extract_passage(
    llm: &dyn LlmClient,
    passage: &CorpusPassage,
    config: &ExtractionConfig,
) -> Result<(ExtractionRecord, ParseDiagnostics)> {
    let text = passage.full_text();
    let entity_reply = complete_checked(llm, &render_entity_prompt(&text)?, config)?;
    let entities = parse_entity_response(&entity_reply.text)?;
    let prop_reply = complete_checked(llm, &render_proposition_prompt(&text, &entities)?, config)?;
    let parsed = parse_proposition_response(&prop_reply.text, &entities)?;
    let record = ExtractionRecord {
        passage_id: passage.id.clone(),
        entities,
        propositions: parsed.propositions,
        provenance: Some(RecordProvenance::Llm {
            model: llm.model().to_string(),
            timestamp: prop_reply.created.max(entity_reply.created),
        }),
    };
    Ok((record, parsed.diagnostics))
}

/// Extracts every passage. Individual failures are recorded and skipped;
/// the call fails only if no passage succeeds.
pub fn ingest_corpus(
    llm: &dyn LlmClient,
    passages: &[CorpusPassage],
    config: &ExtractionConfig,
) -> Result<IngestReport> {
    if passages.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let results: Vec<_> = pool.install(|| {
        passages
            .par_iter()
            .map(|p| (p, extract_passage(llm, p, config)))
            .collect()
    });

    let mut report = IngestReport::default();
    for (passage, result) in results {
        match result {
            Ok((record, diag)) => {
                report.diagnostics.removed_entities += diag.removed_entities;
                report.diagnostics.dropped_propositions += diag.dropped_propositions;
                let haystack = passage.full_text().to_lowercase();
                for e in &record.entities {
                    if !haystack.contains(&e.to_lowercase()) {
                        report
                            .unanchored_entities
                            .push((passage.id.clone(), e.clone()));
                    }
                }
                report.records.push(record);
            }
            Err(e) => {
                log::warn!("extraction failed for passage `{}`: {e}", passage.id);
                report.failures.push(PassageFailure {
                    passage_id: passage.id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    if report.records.is_empty() {
        return Err(Error::AllPassagesFailed(passages.len()));
    }
    report.records.sort_by(|a, b| a.passage_id.cmp(&b.passage_id));
    report
        .failures
        .sort_by(|a, b| a.passage_id.cmp(&b.passage_id));
    Ok(report)
}

/// Loads precomputed records. Records without provenance are tagged with
/// the fixture file name.
pub fn load_records(path: &Path) -> Result<Vec<ExtractionRecord>> {
    let (rows, _) = read_jsonl::<ExtractionRecord, _>(BufReader::new(File::open(path)?), true)?;
    let file = path.display().to_string();
    let mut out = Vec::with_capacity(rows.len());
    for (line, mut record) in rows {
        record
            .validate()
            .map_err(|reason| Error::InvalidRecord { line, reason })?;
        if record.provenance.is_none() {
            record.provenance = Some(RecordProvenance::Fixture { file: file.clone() });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn save_records(path: &Path, records: &[ExtractionRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
