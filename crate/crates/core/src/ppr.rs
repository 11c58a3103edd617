//! Personalized PageRank over a graph view.
//!
//! `damping` is the probability of following an edge; `1 - damping` is the
//! restart probability. Transitions are row-normalized edge weights (clique
//! multiplicity, containment 1, synonymy similarity), with parallel edges of
//! different kinds summed. Mass sitting on a node without edges restarts
//! according to the seed distribution, so the iterate always sums to one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeKinds, GraphView, NodeId, PassageId};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

/// Normalized restart distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedDistribution {
    entries: BTreeMap<NodeId, f64>,
}

impl SeedDistribution {
    /// Sums duplicate nodes and normalizes to total mass one. Zero-weight
    /// entries are dropped.
    pub fn from_weights<I>(weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, f64)>,
    {
        let mut entries: BTreeMap<NodeId, f64> = BTreeMap::new();
        for (node, w) in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidSeeds(format!("weight {w} for {node}")));
            }
            *entries.entry(node).or_insert(0.0) += w;
        }
        entries.retain(|_, w| *w > 0.0);
        let total: f64 = entries.values().sum();
        if entries.is_empty() || total <= 0.0 {
            return Err(Error::InvalidSeeds("no positive weight".into()));
        }
        for w in entries.values_mut() {
            *w /= total;
        }
        Ok(Self { entries })
    }

    pub fn uniform<I>(nodes: I) -> Result<Self>
    where
        I: IntoIterator<Item = NodeId>,
    {
        Self::from_weights(nodes.into_iter().map(|n| (n, 1.0)))
    }

    pub fn get(&self, node: NodeId) -> f64 {
        self.entries.get(&node).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.entries.iter().map(|(&n, &w)| (n, w))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    fn check_view<V: GraphView + ?Sized>(&self, view: &V) -> Result<()> {
        for &node in self.entries.keys() {
            if !view.graph().has_node(node) || !view.contains_node(node) {
                return Err(Error::InvalidSeeds(format!("seed {node} is not in the graph view")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PprParams {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl PprParams {
    pub fn with_damping(damping: f64) -> Self {
        Self {
            damping,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "damping must lie in (0, 1), got {}",
                self.damping
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be > 0".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Stationary scores for every node of the view.
#[derive(Debug, Clone, PartialEq)]
pub struct PprScores {
    nodes: Vec<NodeId>,
    values: Vec<f64>,
    /// Number of sweeps performed.
    pub iterations: usize,
    /// False when `max_iterations` was hit before the L1 change dropped
    /// below the tolerance.
    pub converged: bool,
    /// L1 change of the last sweep.
    pub residual: f64,
}

impl PprScores {
    pub fn get(&self, node: NodeId) -> Option<f64> {
        self.nodes
            .binary_search(&node)
            .ok()
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.nodes.iter().copied().zip(self.values.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Row-normalized sparse transition matrix of a view.
struct Transitions {
    nodes: Vec<NodeId>,
    row_start: Vec<usize>,
    targets: Vec<usize>,
    probs: Vec<f64>,
}

impl Transitions {
    fn build<V: GraphView + ?Sized>(view: &V) -> Result<Self> {
        let nodes = view.node_ids();
        let graph = view.graph();
        let n_entities = graph.entities().len();
        let mut local = vec![usize::MAX; graph.node_count()];
        let slot = |node: NodeId| match node {
            NodeId::Entity(e) => e.index(),
            NodeId::Passage(p) => n_entities + p.index(),
        };
        for (i, &node) in nodes.iter().enumerate() {
            local[slot(node)] = i;
        }

        let mut row_start = Vec::with_capacity(nodes.len() + 1);
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        row_start.push(0);
        for &node in &nodes {
            let start = targets.len();
            let mut total = 0.0;
            for n in view.neighbors(node, EdgeKinds::ALL)? {
                let j = local[slot(n.node)];
                // Neighbors arrive grouped by node; merge parallel kinds.
                if targets.len() > start && *targets.last().unwrap() == j {
                    *probs.last_mut().unwrap() += n.weight;
                } else {
                    targets.push(j);
                    probs.push(n.weight);
                }
                total += n.weight;
            }
            if total > 0.0 {
                for p in &mut probs[start..] {
                    *p /= total;
                }
            }
            row_start.push(targets.len());
        }
        Ok(Self {
            nodes,
            row_start,
            targets,
            probs,
        })
    }
}

/// Iterates `x ← (1-d)·s + d·(Pᵀx + dangling(x)·s)` from `x = s` until the
/// L1 change falls below `params.tolerance`.
pub fn run_ppr<V: GraphView + ?Sized>(
    view: &V,
    seeds: &SeedDistribution,
    params: PprParams,
) -> Result<PprScores> {
    params.validate()?;
    seeds.check_view(view)?;
    let t = Transitions::build(view)?;
    let n = t.nodes.len();

    let mut reset = vec![0.0; n];
    for (node, w) in seeds.iter() {
        let i = t
            .nodes
            .binary_search(&node)
            .map_err(|_| Error::InvalidSeeds(format!("seed {node} is not in the graph view")))?;
        reset[i] = w;
    }

    let d = params.damping;
    let mut x = reset.clone();
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while iterations < params.max_iterations {
        iterations += 1;
        let mut dangling = 0.0;
        next.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let (a, b) = (t.row_start[i], t.row_start[i + 1]);
            if a == b {
                dangling += x[i];
                continue;
            }
            let mass = d * x[i];
            for k in a..b {
                next[t.targets[k]] += mass * t.probs[k];
            }
        }
        let restart = (1.0 - d) + d * dangling;
        for i in 0..n {
            next[i] += restart * reset[i];
        }
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual < params.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "PPR did not converge in {iterations} iterations (residual {residual:.3e})"
        );
    }
    Ok(PprScores {
        nodes: t.nodes,
        values: x,
        iterations,
        converged,
        residual,
    })
}

/// Passages of the view by descending score, ties by ascending id.
pub fn top_passages<V: GraphView + ?Sized>(
    scores: &PprScores,
    view: &V,
    k: usize,
) -> Vec<(PassageId, f64)> {
    let mut ranked: Vec<(PassageId, f64)> = view
        .passage_ids()
        .into_iter()
        .map(|p| (p, scores.get(NodeId::Passage(p)).unwrap_or(0.0)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}
