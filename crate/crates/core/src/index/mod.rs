//! Building a proposition graph from a corpus and its extraction records,
//! and persisting it.

mod store;

use std::collections::{BTreeMap, HashMap};

pub use store::{
    build_timestamp, content_hash, load_index, save_index, IndexManifest, ManifestCounts, EMBEDDINGS_FILE,
    GRAPH_FILE, MANIFEST_FILE, SCHEMA_VERSION,
};

use crate::corpus::CorpusPassage;
use crate::embedding::{EmbedRole, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::extraction::ExtractionRecord;
use crate::graph::{build_graph, PassageInput, PropositionGraph, PropositionInput};
use crate::normalize::{clean_entity, entity_key};

pub const DEFAULT_TAU_SYN: f64 = 0.8;

/// Stable proposition id: the passage id and the proposition's position in
/// its record.
pub fn proposition_key(passage_id: &str, index: usize) -> String {
    format!("{passage_id}#{index}")
}

/// Embeds passages, propositions and entities, then builds the graph.
/// Passages without a record become passage nodes with no propositions.
pub fn build_index(
    passages: &[CorpusPassage],
    records: &[ExtractionRecord],
    provider: &dyn EmbeddingProvider,
    tau_syn: f64,
) -> Result<PropositionGraph> {
    if passages.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let known: HashMap<&str, &CorpusPassage> =
        passages.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut records: Vec<&ExtractionRecord> = records.iter().collect();
    records.sort_by(|a, b| a.passage_id.cmp(&b.passage_id));
    for w in records.windows(2) {
        if w[0].passage_id == w[1].passage_id {
            return Err(Error::InvalidConfig(format!(
                "two extraction records for passage `{}`",
                w[0].passage_id
            )));
        }
    }

    let passage_texts: Vec<String> = passages.iter().map(CorpusPassage::full_text).collect();
    let mut prop_meta: Vec<(String, String, Vec<String>)> = Vec::new();
    for r in &records {
        if !known.contains_key(r.passage_id.as_str()) {
            return Err(Error::dangling("passage", &r.passage_id));
        }
        for (i, p) in r.propositions.iter().enumerate() {
            prop_meta.push((
                proposition_key(&r.passage_id, i),
                r.passage_id.clone(),
                p.entities.clone(),
            ));
        }
    }
    let prop_texts: Vec<String> = records
        .iter()
        .flat_map(|r| r.propositions.iter().map(|p| p.text.clone()))
        .collect();

    // One surface per entity key, first occurrence wins.
    let mut surfaces: BTreeMap<String, String> = BTreeMap::new();
    for (_, _, entities) in &prop_meta {
        for e in entities {
            let key = entity_key(e);
            if !key.is_empty() {
                surfaces.entry(key).or_insert_with(|| clean_entity(e));
            }
        }
    }
    let entity_texts: Vec<String> = surfaces.values().cloned().collect();

    log::info!(
        "embedding {} passages, {} propositions, {} entities",
        passage_texts.len(),
        prop_texts.len(),
        entity_texts.len()
    );
    let passage_vecs = provider.embed_texts(&passage_texts, EmbedRole::Document)?;
    let prop_vecs = if prop_texts.is_empty() {
        Vec::new()
    } else {
        provider.embed_texts(&prop_texts, EmbedRole::Document)?
    };
    let entity_vecs = if entity_texts.is_empty() {
        Vec::new()
    } else {
        provider.embed_texts(&entity_texts, EmbedRole::Document)?
    };

    let passage_inputs: Vec<PassageInput> = passages
        .iter()
        .zip(passage_texts)
        .zip(passage_vecs)
        .map(|((p, text), embedding)| PassageInput {
            id: p.id.clone(),
            text,
            embedding,
        })
        .collect();
    let prop_inputs: Vec<PropositionInput> = prop_meta
        .into_iter()
        .zip(prop_texts)
        .zip(prop_vecs)
        .map(|(((id, passage_id, entities), text), embedding)| PropositionInput {
            id,
            passage_id,
            text,
            entities,
            embedding,
        })
        .collect();
    let entity_embeddings = surfaces.into_keys().zip(entity_vecs).collect();
    build_graph(&prop_inputs, &passage_inputs, &entity_embeddings, tau_syn)
}
