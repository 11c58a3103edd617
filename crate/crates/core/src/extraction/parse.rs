use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::{clean_entity, entity_key};

/// Locates the first balanced `{...}` object, skipping braces inside JSON
/// strings.
pub fn first_json_object(raw: &str) -> Option<&str> {
    let start = raw.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in raw[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&raw[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

fn malformed(reason: impl Into<String>, raw: &str) -> Error {
    Error::MalformedResponse {
        reason: reason.into(),
        raw: raw.to_string(),
    }
}

#[derive(Deserialize)]
struct EntityPayload {
    entities: Vec<String>,
}

/// Parses an entity-extraction reply into cleaned, de-duplicated entity
/// strings. Duplicates are detected on the case-folded key; the first
/// spelling wins.
pub fn parse_entity_response(raw: &str) -> Result<Vec<String>> {
    let object = first_json_object(raw).ok_or_else(|| malformed("no JSON object", raw))?;
    let payload: EntityPayload =
        serde_json::from_str(object).map_err(|e| malformed(e.to_string(), raw))?;
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for e in payload.entities {
        let key = entity_key(&e);
        if key.is_empty() || !seen.insert(key) {
            continue;
        }
        out.push(clean_entity(&e));
    }
    if out.is_empty() {
        return Err(Error::EmptyEntities);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedProposition {
    pub text: String,
    pub entities: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    /// Entity mentions removed because they were not in the allowed list.
    pub removed_entities: usize,
    /// Propositions dropped because no allowed entity remained, or the text
    /// was empty.
    pub dropped_propositions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedPropositions {
    pub propositions: Vec<ExtractedProposition>,
    pub diagnostics: ParseDiagnostics,
}

#[derive(Deserialize)]
struct PropositionPayload {
    propositions: Vec<RawProposition>,
}

#[derive(Deserialize)]
struct RawProposition {
    #[serde(default)]
    text: String,
    #[serde(default)]
    entities: Vec<String>,
}

/// Parses a proposition-extraction reply, keeping only entities from
/// `allowed_entities` (matched on the normalized key, reported in the
/// allowed spelling).
pub fn parse_proposition_response(
    raw: &str,
    allowed_entities: &[String],
) -> Result<ParsedPropositions> {
    if allowed_entities.is_empty() {
        return Err(Error::EmptyInput("allowed entity list"));
    }
    let allowed: HashMap<String, &String> = allowed_entities
        .iter()
        .map(|e| (entity_key(e), e))
        .collect();
    let object = first_json_object(raw).ok_or_else(|| malformed("no JSON object", raw))?;
    let payload: PropositionPayload =
        serde_json::from_str(object).map_err(|e| malformed(e.to_string(), raw))?;

    let mut diagnostics = ParseDiagnostics::default();
    let mut propositions = Vec::new();
    for p in payload.propositions {
        let text = p.text.trim().to_string();
        let mut entities: Vec<String> = Vec::new();
        for e in &p.entities {
            match allowed.get(&entity_key(e)) {
                Some(&surface) if !entities.contains(surface) => entities.push(surface.clone()),
                Some(_) => {}
                None => diagnostics.removed_entities += 1,
            }
        }
        if text.is_empty() || entities.is_empty() {
            diagnostics.dropped_propositions += 1;
            continue;
        }
        propositions.push(ExtractedProposition { text, entities });
    }
    if diagnostics.dropped_propositions > 0 {
        log::warn!(
            "dropped {} propositions with no allowed entities",
            diagnostics.dropped_propositions
        );
    }
    Ok(ParsedPropositions {
        propositions,
        diagnostics,
    })
}
