//! The proposition graph: entity and passage vertices joined by entity
//! cliques (one per proposition), passage containment, and embedding-based
//! synonymy. A built graph is immutable.

mod build;
mod ids;
mod view;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};

pub use build::{build_graph, detect_synonyms, PassageInput, PropositionInput, SynonymPair};
pub use ids::{EdgeKind, EdgeKinds, EntityId, NodeId, PassageId, PropositionId};
pub use view::{induce_subgraph, GraphView, Subgraph};

#[derive(Debug, Clone, PartialEq)]
pub struct EntityNode {
    pub id: EntityId,
    /// Normalized identity key.
    pub key: String,
    /// First-seen display form.
    pub surface: String,
    pub embedding: Embedding,
    /// Sorted ascending.
    pub source_passages: Vec<PassageId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassageNode {
    pub id: PassageId,
    pub key: String,
    pub text: String,
    pub embedding: Embedding,
    pub proposition_ids: Vec<PropositionId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposition {
    pub id: PropositionId,
    pub key: String,
    pub text: String,
    pub entity_ids: Vec<EntityId>,
    pub passage_id: PassageId,
    pub embedding: Embedding,
}

impl Proposition {
    pub fn contains_entity(&self, e: EntityId) -> bool {
        self.entity_ids.contains(&e)
    }
}

/// Co-occurrence of two entities, collapsed over every proposition that
/// contains both. `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueEdge {
    pub a: EntityId,
    pub b: EntityId,
    pub propositions: Vec<PropositionId>,
}

impl CliqueEdge {
    /// Multiplicity: the number of propositions sharing the pair.
    pub fn weight(&self) -> f64 {
        self.propositions.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainmentEdge {
    pub entity: EntityId,
    pub passage: PassageId,
}

/// `a < b`; weight equals the recorded similarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynonymyEdge {
    pub a: EntityId,
    pub b: EntityId,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Propositions(Vec<PropositionId>),
    Passage(PassageId),
    Similarity(f64),
}

/// Uniform view over the three edge families.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub kind: EdgeKind,
    pub endpoints: (NodeId, NodeId),
    pub weight: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub node: NodeId,
    pub kind: EdgeKind,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct EdgeCounts {
    pub clique: usize,
    pub containment: usize,
    pub synonymy: usize,
}

impl EdgeCounts {
    pub fn total(&self) -> usize {
        self.clique + self.containment + self.synonymy
    }
}

#[derive(Debug, Clone)]
pub struct PropositionGraph {
    dimension: usize,
    tau_syn: f64,
    entities: Vec<EntityNode>,
    passages: Vec<PassageNode>,
    propositions: Vec<Proposition>,
    clique_edges: Vec<CliqueEdge>,
    containment_edges: Vec<ContainmentEdge>,
    synonymy_edges: Vec<SynonymyEdge>,
    adjacency: Vec<Vec<Neighbor>>,
    entity_propositions: Vec<Vec<PropositionId>>,
    synonyms: Vec<Vec<(EntityId, f64)>>,
    entity_by_key: HashMap<String, EntityId>,
    passage_by_key: HashMap<String, PassageId>,
    proposition_by_key: HashMap<String, PropositionId>,
}

/// Raw parts of a graph, as produced by the builder or read from disk.
#[derive(Debug, Clone)]
pub struct GraphParts {
    pub dimension: usize,
    pub tau_syn: f64,
    pub entities: Vec<EntityNode>,
    pub passages: Vec<PassageNode>,
    pub propositions: Vec<Proposition>,
    pub clique_edges: Vec<CliqueEdge>,
    pub containment_edges: Vec<ContainmentEdge>,
    pub synonymy_edges: Vec<SynonymyEdge>,
}

impl PropositionGraph {
    /// Assembles indexes from raw parts, validating every cross-reference.
    pub fn from_parts(parts: GraphParts) -> Result<Self> {
        let GraphParts {
            dimension,
            tau_syn,
            entities,
            passages,
            propositions,
            clique_edges,
            containment_edges,
            synonymy_edges,
        } = parts;

        if passages.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let n_e = entities.len();
        let n_p = passages.len();
        let n_q = propositions.len();

        let check_dim = |e: &Embedding| -> Result<()> {
            if e.dimension() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: e.dimension(),
                });
            }
            Ok(())
        };
        let entity_ok = |e: EntityId| -> Result<()> {
            if e.index() < n_e {
                Ok(())
            } else {
                Err(Error::dangling("entity", e.to_string()))
            }
        };
        let passage_ok = |p: PassageId| -> Result<()> {
            if p.index() < n_p {
                Ok(())
            } else {
                Err(Error::dangling("passage", p.to_string()))
            }
        };
        let prop_ok = |p: PropositionId| -> Result<()> {
            if p.index() < n_q {
                Ok(())
            } else {
                Err(Error::dangling("proposition", p.to_string()))
            }
        };

        let mut entity_by_key = HashMap::with_capacity(n_e);
        for (i, e) in entities.iter().enumerate() {
            if e.id.index() != i {
                return Err(Error::CorruptIndex(format!("entity {} out of order", e.id)));
            }
            if e.surface.trim().is_empty() || e.key.is_empty() {
                return Err(Error::CorruptIndex(format!("entity {} has empty surface", e.id)));
            }
            check_dim(&e.embedding)?;
            for &p in &e.source_passages {
                passage_ok(p)?;
            }
            if entity_by_key.insert(e.key.clone(), e.id).is_some() {
                return Err(Error::CorruptIndex(format!("duplicate entity key `{}`", e.key)));
            }
        }
        let mut passage_by_key = HashMap::with_capacity(n_p);
        for (i, p) in passages.iter().enumerate() {
            if p.id.index() != i {
                return Err(Error::CorruptIndex(format!("passage {} out of order", p.id)));
            }
            if p.text.trim().is_empty() {
                return Err(Error::CorruptIndex(format!("passage `{}` has empty text", p.key)));
            }
            check_dim(&p.embedding)?;
            for &q in &p.proposition_ids {
                prop_ok(q)?;
            }
            if passage_by_key.insert(p.key.clone(), p.id).is_some() {
                return Err(Error::CorruptIndex(format!("duplicate passage id `{}`", p.key)));
            }
        }
        let mut proposition_by_key = HashMap::with_capacity(n_q);
        let mut entity_propositions = vec![Vec::new(); n_e];
        for (i, q) in propositions.iter().enumerate() {
            if q.id.index() != i {
                return Err(Error::CorruptIndex(format!("proposition {} out of order", q.id)));
            }
            if q.text.trim().is_empty() {
                return Err(Error::CorruptIndex(format!(
                    "proposition `{}` has empty text",
                    q.key
                )));
            }
            if q.entity_ids.is_empty() {
                return Err(Error::CorruptIndex(format!(
                    "proposition `{}` has no entities",
                    q.key
                )));
            }
            check_dim(&q.embedding)?;
            passage_ok(q.passage_id)?;
            for &e in &q.entity_ids {
                entity_ok(e)?;
                entity_propositions[e.index()].push(q.id);
            }
            if proposition_by_key.insert(q.key.clone(), q.id).is_some() {
                return Err(Error::CorruptIndex(format!(
                    "duplicate proposition id `{}`",
                    q.key
                )));
            }
        }
        for ps in &mut entity_propositions {
            ps.dedup();
        }

        let node_count = n_e + n_p;
        let mut adjacency: Vec<Vec<Neighbor>> = vec![Vec::new(); node_count];
        let mut synonyms = vec![Vec::new(); n_e];
        let mut push = |a: NodeId, b: NodeId, kind: EdgeKind, weight: f64| {
            adjacency[node_index(n_e, a)].push(Neighbor {
                node: b,
                kind,
                weight,
            });
            adjacency[node_index(n_e, b)].push(Neighbor {
                node: a,
                kind,
                weight,
            });
        };
        for c in &clique_edges {
            entity_ok(c.a)?;
            entity_ok(c.b)?;
            if c.a >= c.b || c.propositions.is_empty() {
                return Err(Error::CorruptIndex(format!(
                    "malformed clique edge {}-{}",
                    c.a, c.b
                )));
            }
            for &q in &c.propositions {
                prop_ok(q)?;
            }
            push(c.a.into(), c.b.into(), EdgeKind::Clique, c.weight());
        }
        for c in &containment_edges {
            entity_ok(c.entity)?;
            passage_ok(c.passage)?;
            push(c.entity.into(), c.passage.into(), EdgeKind::Containment, 1.0);
        }
        for s in &synonymy_edges {
            entity_ok(s.a)?;
            entity_ok(s.b)?;
            if s.a >= s.b || !(s.similarity > 0.0 && s.similarity <= 1.0) {
                return Err(Error::CorruptIndex(format!(
                    "malformed synonymy edge {}-{}",
                    s.a, s.b
                )));
            }
            push(s.a.into(), s.b.into(), EdgeKind::Synonymy, s.similarity);
            synonyms[s.a.index()].push((s.b, s.similarity));
            synonyms[s.b.index()].push((s.a, s.similarity));
        }
        for list in &mut adjacency {
            list.sort_by_key(|x| (x.node, x.kind));
        }
        for list in &mut synonyms {
            list.sort_by_key(|&(e, _)| e);
        }

        Ok(Self {
            dimension,
            tau_syn,
            entities,
            passages,
            propositions,
            clique_edges,
            containment_edges,
            synonymy_edges,
            adjacency,
            entity_propositions,
            synonyms,
            entity_by_key,
            passage_by_key,
            proposition_by_key,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn tau_syn(&self) -> f64 {
        self.tau_syn
    }

    pub fn entities(&self) -> &[EntityNode] {
        &self.entities
    }

    pub fn passages(&self) -> &[PassageNode] {
        &self.passages
    }

    pub fn propositions(&self) -> &[Proposition] {
        &self.propositions
    }

    pub fn clique_edges(&self) -> &[CliqueEdge] {
        &self.clique_edges
    }

    pub fn containment_edges(&self) -> &[ContainmentEdge] {
        &self.containment_edges
    }

    pub fn synonymy_edges(&self) -> &[SynonymyEdge] {
        &self.synonymy_edges
    }

    pub fn entity(&self, id: EntityId) -> &EntityNode {
        &self.entities[id.index()]
    }

    pub fn passage(&self, id: PassageId) -> &PassageNode {
        &self.passages[id.index()]
    }

    pub fn proposition(&self, id: PropositionId) -> &Proposition {
        &self.propositions[id.index()]
    }

    pub fn entity_by_key(&self, key: &str) -> Option<EntityId> {
        self.entity_by_key.get(key).copied()
    }

    pub fn passage_by_key(&self, key: &str) -> Option<PassageId> {
        self.passage_by_key.get(key).copied()
    }

    pub fn proposition_by_key(&self, key: &str) -> Option<PropositionId> {
        self.proposition_by_key.get(key).copied()
    }

    pub fn node_count(&self) -> usize {
        self.entities.len() + self.passages.len()
    }

    pub fn has_node(&self, node: NodeId) -> bool {
        match node {
            NodeId::Entity(e) => e.index() < self.entities.len(),
            NodeId::Passage(p) => p.index() < self.passages.len(),
        }
    }

    pub fn node_label(&self, node: NodeId) -> &str {
        match node {
            NodeId::Entity(e) => &self.entity(e).surface,
            NodeId::Passage(p) => &self.passage(p).key,
        }
    }

    /// Entity-to-proposition inverted index.
    pub fn propositions_with_entity(&self, e: EntityId) -> &[PropositionId] {
        &self.entity_propositions[e.index()]
    }

    pub fn synonyms_of(&self, e: EntityId) -> &[(EntityId, f64)] {
        &self.synonyms[e.index()]
    }

    pub fn are_synonyms(&self, a: EntityId, b: EntityId) -> bool {
        self.synonyms[a.index()].iter().any(|&(x, _)| x == b)
    }

    pub(crate) fn raw_neighbors(&self, node: NodeId) -> &[Neighbor] {
        &self.adjacency[node_index(self.entities.len(), node)]
    }

    pub fn edge_counts(&self) -> EdgeCounts {
        EdgeCounts {
            clique: self.clique_edges.len(),
            containment: self.containment_edges.len(),
            synonymy: self.synonymy_edges.len(),
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let cliques = self.clique_edges.iter().map(|c| Edge {
            kind: EdgeKind::Clique,
            endpoints: (c.a.into(), c.b.into()),
            weight: c.weight(),
            provenance: Provenance::Propositions(c.propositions.clone()),
        });
        let contains = self.containment_edges.iter().map(|c| Edge {
            kind: EdgeKind::Containment,
            endpoints: (c.entity.into(), c.passage.into()),
            weight: 1.0,
            provenance: Provenance::Passage(c.passage),
        });
        let syns = self.synonymy_edges.iter().map(|s| Edge {
            kind: EdgeKind::Synonymy,
            endpoints: (s.a.into(), s.b.into()),
            weight: s.similarity,
            provenance: Provenance::Similarity(s.similarity),
        });
        cliques.chain(contains).chain(syns)
    }

    pub fn into_parts(self) -> GraphParts {
        GraphParts {
            dimension: self.dimension,
            tau_syn: self.tau_syn,
            entities: self.entities,
            passages: self.passages,
            propositions: self.propositions,
            clique_edges: self.clique_edges,
            containment_edges: self.containment_edges,
            synonymy_edges: self.synonymy_edges,
        }
    }
}

fn node_index(entity_count: usize, node: NodeId) -> usize {
    match node {
        NodeId::Entity(e) => e.index(),
        NodeId::Passage(p) => entity_count + p.index(),
    }
}
