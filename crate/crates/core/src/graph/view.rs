use super::{
    EdgeKinds, EntityId, Neighbor, NodeId, PassageId, PropositionGraph, PropositionId,
};
use crate::error::{Error, Result};

/// Read-only access to the whole graph or a restriction of it.
pub trait GraphView {
    fn graph(&self) -> &PropositionGraph;

    fn contains_entity(&self, e: EntityId) -> bool;
    fn contains_passage(&self, p: PassageId) -> bool;
    fn contains_proposition(&self, q: PropositionId) -> bool;

    /// Entities in the view, ascending.
    fn entity_ids(&self) -> Vec<EntityId>;
    /// Passages in the view, ascending.
    fn passage_ids(&self) -> Vec<PassageId>;
    /// Propositions in the view, ascending.
    fn proposition_ids(&self) -> Vec<PropositionId>;

    fn contains_node(&self, node: NodeId) -> bool {
        match node {
            NodeId::Entity(e) => self.contains_entity(e),
            NodeId::Passage(p) => self.contains_passage(p),
        }
    }

    /// Every vertex in the view, entities first, each group ascending.
    fn node_ids(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self.entity_ids().into_iter().map(NodeId::from).collect();
        nodes.extend(self.passage_ids().into_iter().map(NodeId::from));
        nodes
    }

    /// Neighbors of `node` restricted to the view, sorted by (node, kind).
    fn neighbors(&self, node: NodeId, kinds: EdgeKinds) -> Result<Vec<Neighbor>> {
        if !self.graph().has_node(node) || !self.contains_node(node) {
            return Err(Error::UnknownNode(node.to_string()));
        }
        Ok(self
            .graph()
            .raw_neighbors(node)
            .iter()
            .filter(|n| kinds.contains(n.kind) && self.contains_node(n.node))
            .copied()
            .collect())
    }

    /// Propositions in the view that mention `e`, ascending.
    fn propositions_with_entity(&self, e: EntityId) -> Vec<PropositionId> {
        self.graph()
            .propositions_with_entity(e)
            .iter()
            .copied()
            .filter(|&q| self.contains_proposition(q))
            .collect()
    }

    /// Synonyms of `e` that lie inside the view.
    fn synonyms_of(&self, e: EntityId) -> Vec<(EntityId, f64)> {
        self.graph()
            .synonyms_of(e)
            .iter()
            .copied()
            .filter(|&(x, _)| self.contains_entity(x))
            .collect()
    }
}

impl GraphView for PropositionGraph {
    fn graph(&self) -> &PropositionGraph {
        self
    }

    fn contains_entity(&self, e: EntityId) -> bool {
        e.index() < self.entities.len()
    }

    fn contains_passage(&self, p: PassageId) -> bool {
        p.index() < self.passages.len()
    }

    fn contains_proposition(&self, q: PropositionId) -> bool {
        q.index() < self.propositions.len()
    }

    fn entity_ids(&self) -> Vec<EntityId> {
        (0..self.entities.len() as u32).map(EntityId).collect()
    }

    fn passage_ids(&self) -> Vec<PassageId> {
        (0..self.passages.len() as u32).map(PassageId).collect()
    }

    fn proposition_ids(&self) -> Vec<PropositionId> {
        (0..self.propositions.len() as u32).map(PropositionId).collect()
    }
}

/// The localized graph induced by a set of passages: those passages, their
/// propositions, and every entity those propositions mention.
#[derive(Debug, Clone)]
pub struct Subgraph<'g> {
    graph: &'g PropositionGraph,
    passages: Vec<PassageId>,
    entities: Vec<EntityId>,
    propositions: Vec<PropositionId>,
    passage_mask: Vec<bool>,
    entity_mask: Vec<bool>,
    proposition_mask: Vec<bool>,
}

pub fn induce_subgraph<'g>(
    graph: &'g PropositionGraph,
    top_passages: &[PassageId],
) -> Result<Subgraph<'g>> {
    let mut passage_mask = vec![false; graph.passages().len()];
    let mut entity_mask = vec![false; graph.entities().len()];
    let mut proposition_mask = vec![false; graph.propositions().len()];
    for &p in top_passages {
        if p.index() >= passage_mask.len() {
            return Err(Error::UnknownPassage(p.to_string()));
        }
        passage_mask[p.index()] = true;
        for &q in &graph.passage(p).proposition_ids {
            proposition_mask[q.index()] = true;
            for &e in &graph.proposition(q).entity_ids {
                entity_mask[e.index()] = true;
            }
        }
    }
    let collect = |mask: &[bool]| -> Vec<u32> {
        mask.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i as u32)
            .collect()
    };
    Ok(Subgraph {
        graph,
        passages: collect(&passage_mask).into_iter().map(PassageId).collect(),
        entities: collect(&entity_mask).into_iter().map(EntityId).collect(),
        propositions: collect(&proposition_mask)
            .into_iter()
            .map(PropositionId)
            .collect(),
        passage_mask,
        entity_mask,
        proposition_mask,
    })
}

impl<'g> Subgraph<'g> {
    pub fn parent(&self) -> &'g PropositionGraph {
        self.graph
    }

    pub fn passages(&self) -> &[PassageId] {
        &self.passages
    }

    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn propositions(&self) -> &[PropositionId] {
        &self.propositions
    }
}

impl GraphView for Subgraph<'_> {
    fn graph(&self) -> &PropositionGraph {
        self.graph
    }

    fn contains_entity(&self, e: EntityId) -> bool {
        self.entity_mask.get(e.index()).copied().unwrap_or(false)
    }

    fn contains_passage(&self, p: PassageId) -> bool {
        self.passage_mask.get(p.index()).copied().unwrap_or(false)
    }

    fn contains_proposition(&self, q: PropositionId) -> bool {
        self.proposition_mask.get(q.index()).copied().unwrap_or(false)
    }

    fn entity_ids(&self) -> Vec<EntityId> {
        self.entities.clone()
    }

    fn passage_ids(&self) -> Vec<PassageId> {
        self.passages.clone()
    }

    fn proposition_ids(&self) -> Vec<PropositionId> {
        self.propositions.clone()
    }
}
