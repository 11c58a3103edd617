#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use propgraph::corpus::{read_corpus, CorpusPassage};
use propgraph::embedding::{EmbedRole, EmbeddingProvider, MockProvider};
use propgraph::extraction::{load_records, ExtractedProposition, ExtractionRecord};
use propgraph::graph::{EdgeKinds, GraphView, NodeId, PropositionGraph, PropositionId};
use propgraph::index::build_index;
use propgraph::normalize::entity_key;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus")
}

pub fn fixture_corpus() -> (Vec<CorpusPassage>, Vec<ExtractionRecord>) {
    let dir = fixture_dir();
    let corpus = read_corpus(&dir.join("corpus.jsonl"), true).unwrap();
    let records = load_records(&dir.join("records.jsonl")).unwrap();
    (corpus.passages, records)
}

pub fn fixture_graph(provider: &MockProvider) -> PropositionGraph {
    let (passages, records) = fixture_corpus();
    build_index(&passages, &records, provider, 0.8).unwrap()
}

const WORDS: [&str; 16] = [
    "amber", "basalt", "cedar", "delta", "ember", "fjord", "garnet", "harbor", "iris", "juniper",
    "kestrel", "lumen", "marsh", "nectar", "onyx", "prairie",
];

/// Random corpus and records. Entity names are one or two words from a
/// small vocabulary, so that some pairs clear a synonymy threshold.
pub fn random_corpus(
    rng: &mut ChaCha8Rng,
    passages: usize,
    max_props: usize,
    vocabulary: usize,
) -> (Vec<CorpusPassage>, Vec<ExtractionRecord>) {
    let names: Vec<String> = (0..vocabulary)
        .map(|i| {
            let a = WORDS[i % WORDS.len()];
            if i < WORDS.len() {
                a.to_string()
            } else {
                format!("{a} {}", WORDS[(i * 7 + 3) % WORDS.len()])
            }
        })
        .collect();
    let mut out_p = Vec::new();
    let mut out_r = Vec::new();
    for i in 0..passages {
        let id = format!("p{i:02}");
        let n = rng.random_range(0..=max_props);
        let mut props = Vec::new();
        for _ in 0..n {
            let k = rng.random_range(1..=3usize);
            let mut es: Vec<String> = names.choose_multiple(rng, k).cloned().collect();
            es.sort();
            let filler: Vec<&str> = (0..rng.random_range(1..4))
                .map(|_| *WORDS.choose(rng).unwrap())
                .collect();
            let text = format!("{} {}", es.join(" "), filler.join(" "));
            props.push(ExtractedProposition { text, entities: es });
        }
        let mut entities: Vec<String> = Vec::new();
        for p in &props {
            for e in &p.entities {
                if !entities.contains(e) {
                    entities.push(e.clone());
                }
            }
        }
        out_p.push(CorpusPassage {
            id: id.clone(),
            title: None,
            text: format!("passage {i} {}", WORDS[i % WORDS.len()]),
        });
        out_r.push(ExtractionRecord {
            passage_id: id,
            entities,
            propositions: props,
            provenance: None,
        });
    }
    (out_p, out_r)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn all_nodes(g: &PropositionGraph) -> Vec<NodeId> {
    g.entities()
        .iter()
        .map(|e| NodeId::Entity(e.id))
        .chain(g.passages().iter().map(|p| NodeId::Passage(p.id)))
        .collect()
}

/// Dense power iteration over a weight matrix assembled from the edge list.
pub fn dense_ppr(g: &PropositionGraph, seeds: &BTreeMap<NodeId, f64>, damping: f64) -> Vec<f64> {
    let nodes = all_nodes(g);
    let index: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let n = nodes.len();
    let mut w = vec![vec![0.0f64; n]; n];
    for e in g.edges() {
        let (a, b) = (index[&e.endpoints.0], index[&e.endpoints.1]);
        w[a][b] += e.weight;
        w[b][a] += e.weight;
    }
    let total: f64 = seeds.values().sum();
    let mut s = vec![0.0; n];
    for (node, v) in seeds {
        s[index[node]] = v / total;
    }
    let mut m = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        let row: f64 = w[i].iter().sum();
        for j in 0..n {
            m[i][j] = if row > 0.0 { w[i][j] / row } else { s[j] };
        }
    }
    let mut x = s.clone();
    for _ in 0..100_000 {
        let mut next: Vec<f64> = s.iter().map(|v| (1.0 - damping) * v).collect();
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                next[j] += damping * x[i] * m[i][j];
            }
        }
        let delta: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    x
}

/// Failures of clique completeness: every co-occurring entity pair has an
/// edge listing exactly the propositions that contain both.
pub fn clique_violations(g: &PropositionGraph, records: &[ExtractionRecord]) -> Vec<String> {
    let mut expected: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    for r in records {
        for (i, p) in r.propositions.iter().enumerate() {
            let keys: BTreeSet<String> = p.entities.iter().map(|e| entity_key(e)).collect();
            let keys: Vec<String> = keys.into_iter().collect();
            for a in 0..keys.len() {
                for b in a + 1..keys.len() {
                    expected
                        .entry((keys[a].clone(), keys[b].clone()))
                        .or_default()
                        .insert(format!("{}#{i}", r.passage_id));
                }
            }
        }
    }
    let mut actual: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    for c in g.clique_edges() {
        let (a, b) = (g.entity(c.a).key.clone(), g.entity(c.b).key.clone());
        let pair = if a < b { (a, b) } else { (b, a) };
        let props = c.propositions.iter().map(|q| g.proposition(*q).key.clone()).collect();
        actual.insert(pair, props);
    }
    let mut bad = Vec::new();
    for (pair, props) in &expected {
        if actual.get(pair) != Some(props) {
            bad.push(format!("pair {pair:?}: expected {props:?}, got {:?}", actual.get(pair)));
        }
    }
    for pair in actual.keys() {
        if !expected.contains_key(pair) {
            bad.push(format!("unexpected clique edge {pair:?}"));
        }
    }
    bad
}

/// Failures of synonymy soundness and completeness against an all-pairs
/// scan of the stored entity embeddings.
pub fn synonymy_violations(g: &PropositionGraph, tau: f64) -> Vec<String> {
    let es = g.entities();
    let mut expected = BTreeSet::new();
    for i in 0..es.len() {
        for j in i + 1..es.len() {
            let a = es[i].embedding.as_slice();
            let b = es[j].embedding.as_slice();
            let sim: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            if sim >= tau {
                expected.insert((es[i].id, es[j].id));
            }
        }
    }
    let actual: BTreeSet<_> = g
        .synonymy_edges()
        .iter()
        .map(|s| (s.a.min(s.b), s.a.max(s.b)))
        .collect();
    let mut bad = Vec::new();
    for p in expected.difference(&actual) {
        bad.push(format!("missing synonymy edge {p:?}"));
    }
    for p in actual.difference(&expected) {
        bad.push(format!("spurious synonymy edge {p:?}"));
    }
    bad
}

/// Failures of adjacency symmetry: u lists v iff v lists u, with the same
/// kind and weight.
pub fn symmetry_violations(g: &PropositionGraph) -> Vec<String> {
    let mut bad = Vec::new();
    for u in all_nodes(g) {
        for nb in g.neighbors(u, EdgeKinds::ALL).unwrap() {
            let back = g.neighbors(nb.node, EdgeKinds::ALL).unwrap();
            let ok = back
                .iter()
                .any(|r| r.node == u && r.kind == nb.kind && r.weight == nb.weight);
            if !ok {
                bad.push(format!("{u} -> {} ({:?}) has no reverse", nb.node, nb.kind));
            }
        }
    }
    bad
}

/// Exact cosine of the concatenated path text against the query.
pub fn path_score(g: &PropositionGraph, path: &[PropositionId], q: &[f64], p: &dyn EmbeddingProvider) -> f64 {
    let text: Vec<&str> = path.iter().map(|&x| g.proposition(x).text.as_str()).collect();
    let v = p.embed_one(&text.join(" "), EmbedRole::Document).unwrap();
    let dot: f64 = v.as_slice().iter().zip(q).map(|(a, b)| a * b).sum();
    dot.clamp(-1.0, 1.0)
}
