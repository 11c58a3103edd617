use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;

use super::{
    CliqueEdge, ContainmentEdge, EntityId, EntityNode, GraphParts, PassageId, PassageNode,
    Proposition, PropositionGraph, PropositionId, SynonymyEdge,
};
use crate::embedding::{dot, Embedding};
use crate::error::{Error, Result};
use crate::normalize::{clean_entity, entity_key};

#[derive(Debug, Clone)]
pub struct PassageInput {
    pub id: String,
    pub text: String,
    pub embedding: Embedding,
}

#[derive(Debug, Clone)]
pub struct PropositionInput {
    pub id: String,
    pub passage_id: String,
    pub text: String,
    /// Entity surface strings; keyed through [`entity_key`].
    pub entities: Vec<String>,
    pub embedding: Embedding,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynonymPair {
    pub a: usize,
    pub b: usize,
    pub similarity: f64,
}

/// All pairs `a < b` whose cosine similarity is at least `tau_syn`.
pub fn detect_synonyms(embeddings: &[&Embedding], tau_syn: f64) -> Result<Vec<SynonymPair>> {
    check_tau(tau_syn)?;
    if let Some(first) = embeddings.first() {
        let d = first.dimension();
        if let Some(bad) = embeddings.iter().find(|e| e.dimension() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.dimension(),
            });
        }
    }
    let rows: Vec<Vec<SynonymPair>> = (0..embeddings.len())
        .into_par_iter()
        .map(|a| {
            let ea = embeddings[a].as_slice();
            (a + 1..embeddings.len())
                .filter_map(|b| {
                    let sim = dot(ea, embeddings[b].as_slice()).clamp(-1.0, 1.0);
                    (sim >= tau_syn).then_some(SynonymPair {
                        a,
                        b,
                        similarity: sim,
                    })
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

fn check_tau(tau_syn: f64) -> Result<()> {
    if !(tau_syn > 0.0 && tau_syn <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "synonymy threshold must lie in (0, 1], got {tau_syn}"
        )));
    }
    Ok(())
}

/// Builds the frozen proposition graph.
///
/// Entities are keyed corpus-wide by [`entity_key`] and numbered in key
/// order; passages are numbered in id order; propositions are grouped by
/// passage and keep their input order within it. All embeddings are rounded
/// to `f32` precision so a graph read back from disk is identical to the one
/// built here.
pub fn build_graph(
    propositions: &[PropositionInput],
    passages: &[PassageInput],
    entity_embeddings: &BTreeMap<String, Embedding>,
    tau_syn: f64,
) -> Result<PropositionGraph> {
    check_tau(tau_syn)?;
    if passages.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let dimension = passages[0].embedding.dimension();
    let check_dim = |e: &Embedding| -> Result<()> {
        if e.dimension() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                found: e.dimension(),
            });
        }
        Ok(())
    };

    // Passages, in id order.
    let mut passage_order: Vec<&PassageInput> = passages.iter().collect();
    passage_order.sort_by(|a, b| a.id.cmp(&b.id));
    let mut passage_ids: HashMap<&str, PassageId> = HashMap::new();
    for (i, p) in passage_order.iter().enumerate() {
        if p.text.trim().is_empty() {
            return Err(Error::EmptyInput("passage text"));
        }
        check_dim(&p.embedding)?;
        if passage_ids.insert(p.id.as_str(), PassageId(i as u32)).is_some() {
            return Err(Error::InvalidConfig(format!("duplicate passage id `{}`", p.id)));
        }
    }

    // Entities, in key order, with their first-seen surface.
    let mut surfaces: BTreeMap<String, String> = BTreeMap::new();
    let mut prop_keys: Vec<Vec<String>> = Vec::with_capacity(propositions.len());
    for q in propositions {
        if q.text.trim().is_empty() {
            return Err(Error::EmptyInput("proposition text"));
        }
        check_dim(&q.embedding)?;
        if !passage_ids.contains_key(q.passage_id.as_str()) {
            return Err(Error::dangling("passage", &q.passage_id));
        }
        let mut keys: Vec<String> = Vec::new();
        for raw in &q.entities {
            let key = entity_key(raw);
            if key.is_empty() {
                continue;
            }
            if !keys.contains(&key) {
                surfaces
                    .entry(key.clone())
                    .or_insert_with(|| clean_entity(raw));
                keys.push(key);
            }
        }
        if keys.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "proposition `{}` has no entities",
                q.id
            )));
        }
        prop_keys.push(keys);
    }
    let entity_ids: HashMap<&str, EntityId> = surfaces
        .keys()
        .enumerate()
        .map(|(i, k)| (k.as_str(), EntityId(i as u32)))
        .collect();

    // Propositions grouped by passage, input order within a passage.
    let mut order: Vec<usize> = (0..propositions.len()).collect();
    order.sort_by_key(|&i| passage_ids[propositions[i].passage_id.as_str()]);
    let mut seen_prop_ids: HashSet<&str> = HashSet::new();
    let mut props: Vec<Proposition> = Vec::with_capacity(propositions.len());
    for (new_idx, &i) in order.iter().enumerate() {
        let q = &propositions[i];
        if !seen_prop_ids.insert(q.id.as_str()) {
            return Err(Error::InvalidConfig(format!("duplicate proposition id `{}`", q.id)));
        }
        props.push(Proposition {
            id: PropositionId(new_idx as u32),
            key: q.id.clone(),
            text: q.text.clone(),
            entity_ids: prop_keys[i]
                .iter()
                .map(|k| entity_ids[k.as_str()])
                .collect(),
            passage_id: passage_ids[q.passage_id.as_str()],
            embedding: q.embedding.quantized(),
        });
    }

    let mut passage_nodes: Vec<PassageNode> = passage_order
        .iter()
        .enumerate()
        .map(|(i, p)| PassageNode {
            id: PassageId(i as u32),
            key: p.id.clone(),
            text: p.text.clone(),
            embedding: p.embedding.quantized(),
            proposition_ids: Vec::new(),
        })
        .collect();
    for q in &props {
        passage_nodes[q.passage_id.index()].proposition_ids.push(q.id);
    }

    // Edges.
    let mut cliques: BTreeMap<(EntityId, EntityId), Vec<PropositionId>> = BTreeMap::new();
    let mut containment: BTreeSet<(EntityId, PassageId)> = BTreeSet::new();
    for q in &props {
        for (i, &a) in q.entity_ids.iter().enumerate() {
            containment.insert((a, q.passage_id));
            for &b in &q.entity_ids[i + 1..] {
                let pair = if a < b { (a, b) } else { (b, a) };
                cliques.entry(pair).or_default().push(q.id);
            }
        }
    }

    let mut entities: Vec<EntityNode> = Vec::with_capacity(surfaces.len());
    for (i, (key, surface)) in surfaces.into_iter().enumerate() {
        let embedding = entity_embeddings
            .get(&key)
            .ok_or_else(|| Error::dangling("entity embedding", &key))?;
        check_dim(embedding)?;
        entities.push(EntityNode {
            id: EntityId(i as u32),
            key,
            surface,
            embedding: embedding.quantized(),
            source_passages: Vec::new(),
        });
    }
    for &(e, p) in &containment {
        entities[e.index()].source_passages.push(p);
    }

    let embedding_refs: Vec<&Embedding> = entities.iter().map(|e| &e.embedding).collect();
    let synonymy_edges = detect_synonyms(&embedding_refs, tau_syn)?
        .into_iter()
        .map(|s| SynonymyEdge {
            a: EntityId(s.a as u32),
            b: EntityId(s.b as u32),
            similarity: s.similarity,
        })
        .collect();

    PropositionGraph::from_parts(GraphParts {
        dimension,
        tau_syn,
        entities,
        passages: passage_nodes,
        propositions: props,
        clique_edges: cliques
            .into_iter()
            .map(|((a, b), propositions)| CliqueEdge { a, b, propositions })
            .collect(),
        containment_edges: containment
            .into_iter()
            .map(|(entity, passage)| ContainmentEdge { entity, passage })
            .collect(),
        synonymy_edges,
    })
}
