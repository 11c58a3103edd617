//! Graph-guided beam search over proposition paths.
//!
//! Paths grow one proposition at a time along shared entities, synonymy
//! links, or jumps to the most query-similar propositions. Each round pools
//! every expansion of every beam path, ranks the pool by the cosine of the
//! averaged proposition embeddings, re-scores the best `pool_size` of them by
//! embedding the concatenated path text, and keeps the top `beam_width`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{average_embedding, cosine, EmbedRole, Embedding, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::graph::{EntityId, GraphView, PropositionGraph, PropositionId};

/// Text placed between proposition texts when a path is embedded whole.
pub const PATH_DELIMITER: &str = " ";

/// How a proposition was reached from its predecessor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Connection {
    /// Both propositions mention `entity`.
    Exact { entity: EntityId },
    /// `from` (in the predecessor) and `to` (in the successor) are joined by
    /// a synonymy edge.
    Synonymous { from: EntityId, to: EntityId },
    /// The successor is one of the top initial propositions.
    Jump,
    /// No graph relation; only produced with graph guidance disabled.
    Unlinked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreTier {
    Preliminary,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningPath {
    pub propositions: Vec<PropositionId>,
    pub connections: Vec<Connection>,
    pub score: f64,
    pub tier: ScoreTier,
}

impl ReasoningPath {
    pub fn len(&self) -> usize {
        self.propositions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.propositions.is_empty()
    }

    pub fn terminal(&self) -> PropositionId {
        *self.propositions.last().expect("paths are never empty")
    }

    fn extended(&self, next: PropositionId, connection: Connection) -> Self {
        let mut propositions = self.propositions.clone();
        propositions.push(next);
        let mut connections = self.connections.clone();
        connections.push(connection);
        Self {
            propositions,
            connections,
            score: f64::NAN,
            tier: ScoreTier::Preliminary,
        }
    }

    /// Concatenated proposition texts, as embedded for exact scoring.
    pub fn text(&self, graph: &PropositionGraph) -> String {
        self.propositions
            .iter()
            .map(|&q| graph.proposition(q).text.as_str())
            .collect::<Vec<_>>()
            .join(PATH_DELIMITER)
    }
}

/// Total order on scored paths: higher score, then shorter, then
/// lexicographically smaller id sequence.
pub fn compare_paths(a: &ReasoningPath, b: &ReasoningPath) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.len().cmp(&b.len()))
        .then_with(|| a.propositions.cmp(&b.propositions))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamConfig {
    pub beam_width: usize,
    pub max_length: usize,
    /// Expansions re-scored exactly per round.
    pub pool_size: usize,
    pub jump_count: usize,
    pub graph_guidance: bool,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            beam_width: 4,
            max_length: 3,
            pool_size: 40,
            jump_count: 3,
            graph_guidance: true,
        }
    }
}

impl BeamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 {
            return Err(Error::InvalidConfig("beam width must be >= 1".into()));
        }
        if self.max_length == 0 {
            return Err(Error::InvalidConfig("maximum path length must be >= 1".into()));
        }
        if self.pool_size < self.beam_width {
            return Err(Error::InvalidConfig(
                "exact-scoring pool must be at least the beam width".into(),
            ));
        }
        Ok(())
    }
}

/// Exact path scorer with a per-search cache keyed by path text.
pub struct PathScorer<'a> {
    provider: &'a dyn EmbeddingProvider,
    query: &'a Embedding,
    cache: Mutex<HashMap<String, f64>>,
}

impl<'a> PathScorer<'a> {
    pub fn new(provider: &'a dyn EmbeddingProvider, query: &'a Embedding) -> Self {
        Self {
            provider,
            query,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Scores every text, embedding all cache misses in one provider call.
    pub fn score_texts(&self, texts: &[String]) -> Result<Vec<f64>> {
        let mut cache = self.cache.lock().expect("scorer cache");
        let mut missing: Vec<String> = texts
            .iter()
            .filter(|t| !cache.contains_key(*t))
            .cloned()
            .collect();
        missing.sort();
        missing.dedup();
        if !missing.is_empty() {
            let vectors = self.provider.embed_texts(&missing, EmbedRole::Document)?;
            for (t, v) in missing.into_iter().zip(vectors) {
                let s = cosine(&v, self.query)?;
                cache.insert(t, s);
            }
        }
        Ok(texts.iter().map(|t| cache[t]).collect())
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().expect("scorer cache").len()
    }
}

/// `cosine(embed(texts joined by a single space), query)`.
pub fn score_path_exact(
    texts: &[&str],
    query: &Embedding,
    provider: &dyn EmbeddingProvider,
) -> Result<f64> {
    if texts.is_empty() {
        return Err(Error::EmptyInput("path texts"));
    }
    let v = provider.embed_one(&texts.join(PATH_DELIMITER), EmbedRole::Document)?;
    cosine(&v, query)
}

/// Cosine between the query and the mean of the path's stored embeddings.
pub fn score_path_preliminary<'e, I>(embeddings: I, query: &Embedding) -> Result<f64>
where
    I: IntoIterator<Item = &'e Embedding>,
{
    cosine(&average_embedding(embeddings)?, query)
}

/// Subgraph propositions ranked by stored-embedding cosine, ties by id.
pub fn rank_propositions<V: GraphView + ?Sized>(
    view: &V,
    query: &Embedding,
) -> Result<Vec<(PropositionId, f64)>> {
    let graph = view.graph();
    let mut ranked = view
        .proposition_ids()
        .into_iter()
        .map(|q| Ok((q, cosine(&graph.proposition(q).embedding, query)?)))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// The `beam_width` most query-similar propositions as singleton paths,
/// scored on the exact tier.
pub fn initialize_beam<V: GraphView + ?Sized>(
    view: &V,
    query: &Embedding,
    config: &BeamConfig,
    scorer: &PathScorer<'_>,
) -> Result<Vec<ReasoningPath>> {
    let ranked = rank_propositions(view, query)?;
    if ranked.is_empty() {
        return Err(Error::EmptySubgraph);
    }
    let graph = view.graph();
    let mut beam: Vec<ReasoningPath> = ranked
        .iter()
        .take(config.beam_width)
        .map(|&(q, _)| ReasoningPath {
            propositions: vec![q],
            connections: Vec::new(),
            score: f64::NAN,
            tier: ScoreTier::Exact,
        })
        .collect();
    let texts: Vec<String> = beam.iter().map(|p| p.text(graph)).collect();
    for (p, s) in beam.iter_mut().zip(scorer.score_texts(&texts)?) {
        p.score = s;
    }
    beam.sort_by(compare_paths);
    Ok(beam)
}

/// The connection that qualifies `candidate` as a successor of `from`, by
/// precedence exact, synonymous, jump. Among several shared or synonymous
/// entities the smallest id (pair) is reported.
pub fn classify_connection<V: GraphView + ?Sized>(
    view: &V,
    from: PropositionId,
    candidate: PropositionId,
    jumps: &[PropositionId],
) -> Option<Connection> {
    let graph = view.graph();
    let a = &graph.proposition(from).entity_ids;
    let b = &graph.proposition(candidate).entity_ids;
    if let Some(&e) = a.iter().filter(|e| b.contains(e)).min() {
        return Some(Connection::Exact { entity: e });
    }
    let synonymous = a
        .iter()
        .flat_map(|&x| {
            view.synonyms_of(x)
                .into_iter()
                .filter(|(y, _)| b.contains(y))
                .map(move |(y, _)| (x, y))
        })
        .min();
    if let Some((from, to)) = synonymous {
        return Some(Connection::Synonymous { from, to });
    }
    if jumps.contains(&candidate) {
        return Some(Connection::Jump);
    }
    None
}

/// Valid next propositions for `path`, ascending by id.
pub fn candidate_expansions<V: GraphView + ?Sized>(
    view: &V,
    path: &ReasoningPath,
    jumps: &[PropositionId],
    config: &BeamConfig,
) -> Vec<(PropositionId, Connection)> {
    let graph = view.graph();
    let terminal = path.terminal();
    let mut pool: Vec<PropositionId> = if config.graph_guidance {
        let mut pool = Vec::new();
        for &e in &graph.proposition(terminal).entity_ids {
            pool.extend(view.propositions_with_entity(e));
            for (syn, _) in view.synonyms_of(e) {
                pool.extend(view.propositions_with_entity(syn));
            }
        }
        pool.extend(jumps.iter().copied().filter(|&q| view.contains_proposition(q)));
        pool
    } else {
        view.proposition_ids()
    };
    pool.sort();
    pool.dedup();
    pool.into_iter()
        .filter(|q| !path.propositions.contains(q))
        .map(|q| {
            let c = classify_connection(view, terminal, q, jumps).unwrap_or(Connection::Unlinked);
            (q, c)
        })
        .collect()
}

/// Re-checks a path against the graph: no repeats, and every connection
/// holds.
pub fn validate_path<V: GraphView + ?Sized>(
    view: &V,
    path: &ReasoningPath,
    jumps: &[PropositionId],
) -> Result<()> {
    let graph = view.graph();
    let mismatch = |msg: String| Err(Error::PathGraphMismatch(msg));
    if path.propositions.is_empty() {
        return mismatch("empty path".into());
    }
    if path.connections.len() + 1 != path.propositions.len() {
        return mismatch("connection count does not match path length".into());
    }
    if !path.score.is_finite() {
        return mismatch("non-finite score".into());
    }
    for (i, &q) in path.propositions.iter().enumerate() {
        if !view.contains_proposition(q) {
            return mismatch(format!("{q} is not in the graph view"));
        }
        if path.propositions[..i].contains(&q) {
            return mismatch(format!("{q} repeats"));
        }
    }
    for (i, c) in path.connections.iter().enumerate() {
        let (a, b) = (
            graph.proposition(path.propositions[i]),
            graph.proposition(path.propositions[i + 1]),
        );
        let ok = match *c {
            Connection::Exact { entity } => a.contains_entity(entity) && b.contains_entity(entity),
            Connection::Synonymous { from, to } => {
                a.contains_entity(from) && b.contains_entity(to) && graph.are_synonyms(from, to)
            }
            Connection::Jump => jumps.contains(&b.id),
            Connection::Unlinked => true,
        };
        if !ok {
            return mismatch(format!("connection {c:?} between {} and {}", a.id, b.id));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamOutcome {
    /// Final paths, best first, at most `beam_width`.
    pub paths: Vec<ReasoningPath>,
    /// Jump targets fixed at initialization.
    pub jumps: Vec<PropositionId>,
    pub rounds: usize,
}

/// Runs the search. The result is a pure function of its inputs.
pub fn run_beam_search<V: GraphView + Sync + ?Sized>(
    view: &V,
    query: &Embedding,
    config: &BeamConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<BeamOutcome> {
    config.validate()?;
    let graph = view.graph();
    let scorer = PathScorer::new(provider, query);
    let jumps: Vec<PropositionId> = rank_propositions(view, query)?
        .into_iter()
        .take(config.jump_count)
        .map(|(q, _)| q)
        .collect();
    let mut beam = initialize_beam(view, query, config, &scorer)?;
    let mut finished: Vec<ReasoningPath> = Vec::new();
    let mut rounds = 0;

    while rounds + 1 < config.max_length && !beam.is_empty() {
        rounds += 1;
        let mut pool: Vec<ReasoningPath> = Vec::new();
        for path in beam.drain(..) {
            let candidates = candidate_expansions(view, &path, &jumps, config);
            if candidates.is_empty() {
                finished.push(path);
                continue;
            }
            pool.extend(candidates.into_iter().map(|(q, c)| path.extended(q, c)));
        }
        if pool.is_empty() {
            break;
        }
        pool.par_iter_mut().try_for_each(|p| -> Result<()> {
            p.score = score_path_preliminary(
                p.propositions.iter().map(|&q| &graph.proposition(q).embedding),
                query,
            )?;
            Ok(())
        })?;
        pool.sort_by(compare_paths);
        pool.truncate(config.pool_size);

        let texts: Vec<String> = pool.iter().map(|p| p.text(graph)).collect();
        for (p, s) in pool.iter_mut().zip(scorer.score_texts(&texts)?) {
            p.score = s;
            p.tier = ScoreTier::Exact;
        }
        pool.sort_by(compare_paths);
        pool.truncate(config.beam_width);
        beam = pool;
    }

    beam.extend(finished);
    beam.sort_by(compare_paths);
    beam.truncate(config.beam_width);
    Ok(BeamOutcome {
        paths: beam,
        jumps,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::MockProvider;
    use crate::graph::induce_subgraph;
    use crate::testutil::mock_graph;

    #[test]
    fn config_validation() {
        assert!(BeamConfig::default().validate().is_ok());
        for bad in [
            BeamConfig {
                beam_width: 0,
                ..Default::default()
            },
            BeamConfig {
                max_length: 0,
                ..Default::default()
            },
            BeamConfig {
                pool_size: 3,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn single_proposition_subgraph() {
        let provider = MockProvider::new(64).unwrap();
        let g = mock_graph(&provider, &[("d1", &[("alpha beta", &["Alpha"])])]);
        let q = provider.embed_one("alpha", EmbedRole::Query).unwrap();
        let out = run_beam_search(&g, &q, &BeamConfig::default(), &provider).unwrap();
        assert_eq!(out.paths.len(), 1);
        let expected = cosine(&g.propositions()[0].embedding, &q).unwrap();
        assert!((out.paths[0].score - expected).abs() < 1e-6);
        assert_eq!(out.paths[0].tier, ScoreTier::Exact);
    }

    #[test]
    fn preliminary_of_duplicates_equals_singleton() {
        let provider = MockProvider::new(64).unwrap();
        let a = provider.embed_one("x y z", EmbedRole::Document).unwrap();
        let q = provider.embed_one("x", EmbedRole::Query).unwrap();
        let single = score_path_preliminary([&a], &q).unwrap();
        let double = score_path_preliminary([&a, &a], &q).unwrap();
        assert!((single - cosine(&a, &q).unwrap()).abs() < 1e-12);
        assert!((single - double).abs() < 1e-12);
    }

    #[test]
    fn isolated_terminal_yields_only_jumps() {
        let provider = MockProvider::new(64).unwrap();
        let g = mock_graph(
            &provider,
            &[
                ("d1", &[("one", &["A"]), ("two", &["B"])]),
                ("d2", &[("three", &["C"])]),
            ],
        );
        let path = ReasoningPath {
            propositions: vec![PropositionId(0)],
            connections: vec![],
            score: 0.0,
            tier: ScoreTier::Exact,
        };
        let jumps = [PropositionId(2)];
        let c = candidate_expansions(&g, &path, &jumps, &BeamConfig::default());
        assert_eq!(c, vec![(PropositionId(2), Connection::Jump)]);
        assert!(candidate_expansions(&g, &path, &[], &BeamConfig::default()).is_empty());
        let unguided = BeamConfig {
            graph_guidance: false,
            ..Default::default()
        };
        let c = candidate_expansions(&g, &path, &jumps, &unguided);
        assert_eq!(
            c,
            vec![
                (PropositionId(1), Connection::Unlinked),
                (PropositionId(2), Connection::Jump)
            ]
        );
    }

    #[test]
    fn max_length_one_returns_initial_beam() {
        let provider = MockProvider::new(128).unwrap();
        let g = mock_graph(
            &provider,
            &[
                ("d1", &[("red apple", &["Apple"]), ("apple tree", &["Apple", "Tree"])]),
                ("d2", &[("tree house", &["Tree"]), ("red house", &["House"])]),
            ],
        );
        let q = provider.embed_one("red apple tree", EmbedRole::Query).unwrap();
        let config = BeamConfig {
            max_length: 1,
            ..Default::default()
        };
        let out = run_beam_search(&g, &q, &config, &provider).unwrap();
        let scorer = PathScorer::new(&provider, &q);
        let init = initialize_beam(&g, &q, &config, &scorer).unwrap();
        assert_eq!(out.paths, init);
        assert_eq!(out.rounds, 0);
    }

    #[test]
    fn greedy_and_beam_diverge() {
        // Greedy commits to "a", whose only continuation is weak; width two
        // keeps "b x", whose continuation "c y" completes the query.
        let provider = MockProvider::new(512).unwrap();
        let g = mock_graph(
            &provider,
            &[
                ("d1", &[("a", &["E1"]), ("z w", &["E1"])]),
                ("d2", &[("b x", &["E2"]), ("c y", &["E2"])]),
            ],
        );
        let q = provider.embed_one("a b c", EmbedRole::Query).unwrap();
        let run = |width| {
            let config = BeamConfig {
                beam_width: width,
                max_length: 2,
                pool_size: 40,
                jump_count: 0,
                graph_guidance: true,
            };
            run_beam_search(&g, &q, &config, &provider).unwrap().paths
        };
        let greedy = run(1);
        let beam = run(2);
        let text = |p: &ReasoningPath| p.text(&g);
        assert_eq!(text(&greedy[0]), "a z w");
        assert_eq!(text(&beam[0]), "b x c y");
        assert!(beam[0].score > greedy[0].score);
    }

    #[test]
    fn search_is_confined_to_subgraph() {
        let provider = MockProvider::new(128).unwrap();
        let g = mock_graph(
            &provider,
            &[
                ("d1", &[("red apple", &["Apple"])]),
                ("d2", &[("apple pie", &["Apple", "Pie"])]),
            ],
        );
        let sub = induce_subgraph(&g, &[crate::graph::PassageId(0)]).unwrap();
        let q = provider.embed_one("apple pie", EmbedRole::Query).unwrap();
        let out = run_beam_search(&sub, &q, &BeamConfig::default(), &provider).unwrap();
        assert_eq!(out.paths.len(), 1);
        assert_eq!(out.paths[0].propositions, vec![PropositionId(0)]);
    }
}
