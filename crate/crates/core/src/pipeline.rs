//! Two-stage online retrieval.
//!
//! Stage 1 seeds an exploratory PageRank with the entities of the
//! propositions closest to the query and induces a subgraph from the best
//! passages. Stage 2 runs beam search inside that subgraph, turns the
//! discovered paths into entity scores, and seeds a second PageRank whose
//! passage scores are the final ranking.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::beam::{run_beam_search, BeamConfig, Connection, ReasoningPath};
use crate::embedding::{cosine, EmbedRole, Embedding, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::graph::{
    induce_subgraph, EntityId, GraphView, NodeId, PassageId, PropositionGraph, PropositionId,
    Subgraph,
};
use crate::ppr::{
    run_ppr, top_passages, PprParams, PprScores, SeedDistribution, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    #[default]
    Both,
    ExplorationOnly,
    ExploitationOnly,
}

impl std::str::FromStr for SeedMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "both" => Ok(SeedMode::Both),
            "exploration_only" => Ok(SeedMode::ExplorationOnly),
            "exploitation_only" => Ok(SeedMode::ExploitationOnly),
            _ => Err(Error::InvalidConfig(format!(
                "unknown seed mode `{s}` (expected both, exploration_only, exploitation_only)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Propositions whose entities seed stage 1.
    pub n_prop: usize,
    /// Cap on stage-1 seed entities.
    pub n_entity: usize,
    /// Passages kept in the stage-1 subgraph.
    pub top_k_passages: usize,
    pub damping_stage1: f64,
    pub damping_stage2: f64,
    /// Exploration seed entities.
    pub b_initial: usize,
    /// Stage-1 propositions the exploration seeds come from; `None` ties it
    /// to the beam width.
    pub p_initial: Option<usize>,
    /// Exploitation seed entities.
    pub b_beam: usize,
    /// Beam paths the exploitation seeds come from.
    pub p_beam: usize,
    /// Share of stage-2 restart mass given to passages.
    pub lambda_passage: f64,
    pub seed_mode: SeedMode,
    pub beam: BeamConfig,
    pub ppr_tolerance: f64,
    pub ppr_max_iterations: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            n_prop: 20,
            n_entity: 40,
            top_k_passages: 50,
            damping_stage1: 0.75,
            damping_stage2: 0.45,
            b_initial: 5,
            p_initial: None,
            b_beam: 5,
            p_beam: 5,
            lambda_passage: 0.05,
            seed_mode: SeedMode::Both,
            beam: BeamConfig::default(),
            ppr_tolerance: DEFAULT_TOLERANCE,
            ppr_max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl PipelineConfig {
    pub fn p_initial(&self) -> usize {
        self.p_initial.unwrap_or(self.beam.beam_width)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_prop", self.n_prop),
            ("n_entity", self.n_entity),
            ("top_k_passages", self.top_k_passages),
            ("b_initial", self.b_initial),
            ("p_initial", self.p_initial()),
            ("b_beam", self.b_beam),
            ("p_beam", self.p_beam),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        for (name, d) in [
            ("damping_stage1", self.damping_stage1),
            ("damping_stage2", self.damping_stage2),
        ] {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1)")));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda_passage) {
            return Err(Error::InvalidConfig("lambda_passage must lie in [0, 1]".into()));
        }
        self.beam.validate()?;
        self.ppr_params(self.damping_stage1).validate()
    }

    fn ppr_params(&self, damping: f64) -> PprParams {
        PprParams {
            damping,
            tolerance: self.ppr_tolerance,
            max_iterations: self.ppr_max_iterations,
        }
    }
}

/// Per-entity breakdown of a path-derived score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityContribution {
    pub membership: f64,
    pub synonymy: f64,
}

/// Path-derived entity relevance: each proposition in a path lends the
/// path's score to each of its entities, and the far end of every
/// synonymous connection receives the score once more.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EntityScoreMap {
    pub contributions: BTreeMap<EntityId, EntityContribution>,
}

impl EntityScoreMap {
    pub fn get(&self, e: EntityId) -> f64 {
        self.contributions
            .get(&e)
            .map(|c| c.membership + c.synonymy)
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntityId, f64)> + '_ {
        self.contributions
            .iter()
            .map(|(&e, c)| (e, c.membership + c.synonymy))
    }

    pub fn len(&self) -> usize {
        self.contributions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contributions.is_empty()
    }
}

/// Accumulates entity scores from scored paths. Negative path scores
/// contribute zero.
pub fn entity_scores_from_paths(
    paths: &[ReasoningPath],
    graph: &PropositionGraph,
) -> Result<EntityScoreMap> {
    let mut map = EntityScoreMap::default();
    for path in paths {
        if path.connections.len() + 1 != path.propositions.len() {
            return Err(Error::PathGraphMismatch(
                "connection count does not match path length".into(),
            ));
        }
        let s = path.score.max(0.0);
        for &q in &path.propositions {
            if q.index() >= graph.propositions().len() {
                return Err(Error::PathGraphMismatch(format!("unknown proposition {q}")));
            }
            for &e in &graph.proposition(q).entity_ids {
                map.contributions.entry(e).or_default().membership += s;
            }
        }
        for (i, c) in path.connections.iter().enumerate() {
            if let Connection::Synonymous { from, to } = *c {
                let (a, b) = (path.propositions[i], path.propositions[i + 1]);
                if !graph.proposition(a).contains_entity(from)
                    || !graph.proposition(b).contains_entity(to)
                {
                    return Err(Error::PathGraphMismatch(format!(
                        "synonymous connection {from}->{to} does not match {a}->{b}"
                    )));
                }
                map.contributions.entry(to).or_default().synonymy += s;
            }
        }
    }
    Ok(map)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedDiagnostics {
    pub exploration: Vec<(EntityId, f64)>,
    pub exploitation: Vec<(EntityId, f64)>,
    pub passage_mass: f64,
    pub entity_scores_consulted: bool,
}

fn normalize_group(group: &[(EntityId, f64)]) -> Vec<(NodeId, f64)> {
    let total: f64 = group.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return Vec::new();
    }
    group.iter().map(|&(e, w)| (e.into(), w / total)).collect()
}

fn top_weighted(mut items: Vec<(EntityId, f64)>, n: usize) -> Vec<(EntityId, f64)> {
    items.retain(|(_, w)| *w > 0.0);
    items.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    items.truncate(n);
    items
}

/// Exploration candidates: entities of the first `p_initial` stage-1
/// propositions that lie in the view, weighted by entity-query cosine.
pub fn exploration_seeds<V: GraphView + ?Sized>(
    view: &V,
    query: &Embedding,
    stage1_top: &[PropositionId],
    config: &PipelineConfig,
) -> Result<Vec<(EntityId, f64)>> {
    let graph = view.graph();
    let mut seen = HashSet::new();
    let mut items = Vec::new();
    for &q in stage1_top.iter().take(config.p_initial()) {
        for &e in &graph.proposition(q).entity_ids {
            if view.contains_entity(e) && seen.insert(e) {
                items.push((e, cosine(&graph.entity(e).embedding, query)?.max(0.0)));
            }
        }
    }
    Ok(top_weighted(items, config.b_initial))
}

/// Exploitation candidates: entities of the first `p_beam` paths, weighted
/// by their accumulated path score.
pub fn exploitation_seeds(
    graph: &PropositionGraph,
    paths: &[ReasoningPath],
    scores: &EntityScoreMap,
    config: &PipelineConfig,
) -> Vec<(EntityId, f64)> {
    let mut seen = HashSet::new();
    let mut items = Vec::new();
    for path in paths.iter().take(config.p_beam) {
        for &q in &path.propositions {
            for &e in &graph.proposition(q).entity_ids {
                if seen.insert(e) {
                    items.push((e, scores.get(e)));
                }
            }
        }
    }
    top_weighted(items, config.b_beam)
}

/// Mixes the seed groups: each entity group sums to one, the groups present
/// are averaged, then passages take `lambda_passage` of the mass in
/// proportion to their query cosine.
pub fn combine_seeds(
    exploration: &[(EntityId, f64)],
    exploitation: &[(EntityId, f64)],
    passage_similarities: &[(PassageId, f64)],
    lambda_passage: f64,
) -> Result<(SeedDistribution, f64)> {
    let groups: Vec<Vec<(NodeId, f64)>> = [exploration, exploitation]
        .into_iter()
        .map(normalize_group)
        .filter(|g| !g.is_empty())
        .collect();
    let passage_total: f64 = passage_similarities.iter().map(|(_, s)| s.max(0.0)).sum();
    let passage_share = if passage_total > 0.0 { lambda_passage } else { 0.0 };
    let (entity_share, passage_share) = match (groups.is_empty(), passage_share > 0.0) {
        (true, false) => return Err(Error::NoSeeds),
        (true, true) => (0.0, 1.0),
        (false, _) => (1.0 - passage_share, passage_share),
    };

    let mut weights: Vec<(NodeId, f64)> = Vec::new();
    let per_group = entity_share / groups.len().max(1) as f64;
    for g in &groups {
        weights.extend(g.iter().map(|&(n, w)| (n, w * per_group)));
    }
    if passage_share > 0.0 {
        weights.extend(
            passage_similarities
                .iter()
                .map(|&(p, s)| (p.into(), passage_share * s.max(0.0) / passage_total)),
        );
    }
    Ok((SeedDistribution::from_weights(weights)?, passage_share))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PprSummary {
    pub iterations: usize,
    pub converged: bool,
}

impl From<&PprScores> for PprSummary {
    fn from(s: &PprScores) -> Self {
        Self {
            iterations: s.iterations,
            converged: s.converged,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubgraphSize {
    pub passages: usize,
    pub entities: usize,
    pub propositions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage1Diagnostics {
    pub top_propositions: Vec<(PropositionId, f64)>,
    pub seed_entities: Vec<EntityId>,
    pub ppr: PprSummary,
    pub top_passages: Vec<(PassageId, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalDiagnostics {
    pub stage1: Stage1Diagnostics,
    pub subgraph: SubgraphSize,
    pub seeds: SeedDiagnostics,
    pub beam_rounds: usize,
    pub stage2_ppr: PprSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPassage {
    pub passage: PassageId,
    /// The corpus id of the passage.
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub passages: Vec<RankedPassage>,
    pub paths: Vec<ReasoningPath>,
    pub diagnostics: RetrievalDiagnostics,
}

/// Stage 1: exploratory PageRank over the whole graph and subgraph
/// induction.
pub fn stage1<'g>(
    graph: &'g PropositionGraph,
    query: &Embedding,
    config: &PipelineConfig,
) -> Result<(Subgraph<'g>, Stage1Diagnostics)> {
    let mut ranked = graph
        .propositions()
        .iter()
        .map(|q| Ok((q.id, cosine(&q.embedding, query)?)))
        .collect::<Result<Vec<_>>>()?;
    if ranked.is_empty() {
        return Err(Error::EmptySubgraph);
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(config.n_prop);

    let mut seen = HashSet::new();
    let mut seed_entities = Vec::new();
    'outer: for &(q, _) in &ranked {
        for &e in &graph.proposition(q).entity_ids {
            if seed_entities.len() >= config.n_entity {
                break 'outer;
            }
            if seen.insert(e) {
                seed_entities.push(e);
            }
        }
    }
    let seeds = SeedDistribution::uniform(seed_entities.iter().map(|&e| NodeId::from(e)))?;
    let scores = run_ppr(graph, &seeds, config.ppr_params(config.damping_stage1))?;
    if !scores.converged {
        log::warn!("stage-1 PageRank did not converge (residual {})", scores.residual);
    }
    let top = top_passages(&scores, graph, config.top_k_passages);
    let ids: Vec<PassageId> = top.iter().map(|&(p, _)| p).collect();
    let sub = induce_subgraph(graph, &ids)?;
    Ok((
        sub,
        Stage1Diagnostics {
            top_propositions: ranked,
            seed_entities,
            ppr: PprSummary::from(&scores),
            top_passages: top,
        },
    ))
}

fn check_deadline(deadline: Option<Instant>) -> Result<()> {
    match deadline {
        Some(d) if Instant::now() >= d => Err(Error::Timeout),
        _ => Ok(()),
    }
}

/// Stage 2: beam search, seed refinement and the exploitative PageRank,
/// all confined to `sub`.
pub fn stage2(
    sub: &Subgraph<'_>,
    query: &Embedding,
    stage1: Stage1Diagnostics,
    k_out: usize,
    config: &PipelineConfig,
    provider: &dyn EmbeddingProvider,
    deadline: Option<Instant>,
) -> Result<RankedResult> {
    let graph = sub.parent();
    let (paths, beam_rounds) = if sub.propositions().is_empty() {
        (Vec::new(), 0)
    } else {
        let outcome = run_beam_search(sub, query, &config.beam, provider)?;
        (outcome.paths, outcome.rounds)
    };
    check_deadline(deadline)?;

    let stage1_top: Vec<PropositionId> =
        stage1.top_propositions.iter().map(|&(q, _)| q).collect();
    let exploration = match config.seed_mode {
        SeedMode::ExploitationOnly => Vec::new(),
        _ => exploration_seeds(sub, query, &stage1_top, config)?,
    };
    let (exploitation, consulted) = match config.seed_mode {
        SeedMode::ExplorationOnly => (Vec::new(), false),
        _ => {
            let scores = entity_scores_from_paths(&paths, graph)?;
            (exploitation_seeds(graph, &paths, &scores, config), true)
        }
    };
    let passage_sims = sub
        .passages()
        .iter()
        .map(|&p| Ok((p, cosine(&graph.passage(p).embedding, query)?)))
        .collect::<Result<Vec<_>>>()?;
    let (seeds, passage_mass) =
        combine_seeds(&exploration, &exploitation, &passage_sims, config.lambda_passage)?;

    let scores = run_ppr(sub, &seeds, config.ppr_params(config.damping_stage2))?;
    if !scores.converged {
        log::warn!("stage-2 PageRank did not converge (residual {})", scores.residual);
    }
    let passages = top_passages(&scores, sub, k_out)
        .into_iter()
        .map(|(p, score)| RankedPassage {
            passage: p,
            id: graph.passage(p).key.clone(),
            score,
        })
        .collect();
    Ok(RankedResult {
        passages,
        paths,
        diagnostics: RetrievalDiagnostics {
            stage1,
            subgraph: SubgraphSize {
                passages: sub.passages().len(),
                entities: sub.entities().len(),
                propositions: sub.propositions().len(),
            },
            seeds: SeedDiagnostics {
                exploration,
                exploitation,
                passage_mass,
                entity_scores_consulted: consulted,
            },
            beam_rounds,
            stage2_ppr: PprSummary::from(&scores),
        },
    })
}

/// Full retrieval for an already embedded query.
pub fn retrieve_embedded(
    graph: &PropositionGraph,
    query: &Embedding,
    k_out: usize,
    config: &PipelineConfig,
    provider: &dyn EmbeddingProvider,
    deadline: Option<Instant>,
) -> Result<RankedResult> {
    if k_out == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    config.validate()?;
    if query.dimension() != graph.dimension() {
        return Err(Error::DimensionDrift {
            expected: graph.dimension(),
            found: query.dimension(),
        });
    }
    let (sub, diag) = stage1(graph, query, config)?;
    check_deadline(deadline)?;
    stage2(&sub, query, diag, k_out, config, provider, deadline)
}

/// Embeds `query` and retrieves the top `k_out` passages.
pub fn retrieve(
    graph: &PropositionGraph,
    query: &str,
    k_out: usize,
    config: &PipelineConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<RankedResult> {
    retrieve_with_deadline(graph, query, k_out, config, provider, None)
}

pub fn retrieve_with_deadline(
    graph: &PropositionGraph,
    query: &str,
    k_out: usize,
    config: &PipelineConfig,
    provider: &dyn EmbeddingProvider,
    deadline: Option<Instant>,
) -> Result<RankedResult> {
    if query.trim().is_empty() {
        return Err(Error::EmptyInput("query"));
    }
    let q = provider.embed_one(query, EmbedRole::Query)?;
    retrieve_embedded(graph, &q, k_out, config, provider, deadline)
}

/// One path in the layout
/// `0.5989 - (P1) text → (P2) text (via entity link: "A" → "B")`.
pub fn render_path(graph: &PropositionGraph, path: &ReasoningPath) -> String {
    let mut out = format!("{:.4} -", path.score);
    for (i, &q) in path.propositions.iter().enumerate() {
        if i > 0 {
            out.push_str(" →");
        }
        out.push_str(&format!(" (P{}) {}", i + 1, graph.proposition(q).text));
    }
    if !path.connections.is_empty() {
        let links: Vec<String> = path
            .connections
            .iter()
            .map(|c| match *c {
                Connection::Exact { entity } => format!("\"{}\"", graph.entity(entity).surface),
                Connection::Synonymous { from, to } => format!(
                    "\"{}\" → \"{}\"",
                    graph.entity(from).surface,
                    graph.entity(to).surface
                ),
                Connection::Jump => "jump".to_string(),
                Connection::Unlinked => "unlinked".to_string(),
            })
            .collect();
        out.push_str(&format!(" (via entity link: {})", links.join("; ")));
    }
    out
}
