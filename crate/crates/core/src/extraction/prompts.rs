use crate::error::{Error, Result};

const ENTITY_TEMPLATE: &str = include_str!("../../templates/entity_extraction.txt");
const PROPOSITION_TEMPLATE: &str = include_str!("../../templates/proposition_extraction.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptName {
    EntityExtraction,
    PropositionExtraction,
}

/// A fixed instruction + demonstration block with `${slot}` placeholders.
#[derive(Debug, Clone, Copy)]
pub struct PromptTemplate {
    pub name: PromptName,
    body: &'static str,
}

impl PromptTemplate {
    pub const ENTITY: PromptTemplate = PromptTemplate {
        name: PromptName::EntityExtraction,
        body: ENTITY_TEMPLATE,
    };
    pub const PROPOSITION: PromptTemplate = PromptTemplate {
        name: PromptName::PropositionExtraction,
        body: PROPOSITION_TEMPLATE,
    };

    pub fn slots(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut rest = self.body;
        while let Some(start) = rest.find("${") {
            let Some(len) = rest[start..].find('}') else { break };
            out.push(&rest[start + 2..start + len]);
            rest = &rest[start + len + 1..];
        }
        out
    }

    /// Substitutes every slot in one pass; slot values are inserted
    /// verbatim and never re-scanned.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String> {
        let body = self.body.trim_end_matches('\n');
        let mut out = String::with_capacity(body.len() + 256);
        let mut rest = body;
        while let Some(start) = rest.find("${") {
            out.push_str(&rest[..start]);
            let end = rest[start..]
                .find('}')
                .map(|i| start + i)
                .ok_or_else(|| Error::InvalidConfig("unterminated template slot".into()))?;
            let slot = &rest[start + 2..end];
            let value = values
                .iter()
                .find(|(k, _)| *k == slot)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::InvalidConfig(format!("unfilled template slot `{slot}`")))?;
            out.push_str(value);
            rest = &rest[end + 1..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

pub fn render_entity_prompt(passage: &str) -> Result<String> {
    if passage.trim().is_empty() {
        return Err(Error::EmptyInput("passage"));
    }
    PromptTemplate::ENTITY.render(&[("passage", passage)])
}

/// JSON list in the demonstration's style: `["A", "B"]`.
pub fn entities_json_list(entities: &[String]) -> String {
    let items: Vec<String> = entities
        .iter()
        .map(|e| serde_json::to_string(e).expect("strings always serialize"))
        .collect();
    format!("[{}]", items.join(", "))
}

pub fn render_proposition_prompt(passage: &str, entities: &[String]) -> Result<String> {
    if passage.trim().is_empty() {
        return Err(Error::EmptyInput("passage"));
    }
    if entities.is_empty() {
        return Err(Error::EmptyInput("entity list"));
    }
    let list = entities_json_list(entities);
    PromptTemplate::PROPOSITION.render(&[("passage", passage), ("entities_json_list", &list)])
}
