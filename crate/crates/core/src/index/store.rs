//! On-disk index: `graph.jsonl`, `embeddings.bin`, `manifest.json`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::{
    CliqueEdge, ContainmentEdge, EdgeCounts, EntityId, EntityNode, GraphParts, PassageId,
    PassageNode, Proposition, PropositionGraph, PropositionId, SynonymyEdge,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const GRAPH_FILE: &str = "graph.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.bin";
pub const MANIFEST_FILE: &str = "manifest.json";
const MAGIC: &[u8; 4] = b"PRPG";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCounts {
    pub entities: usize,
    pub passages: usize,
    pub propositions: usize,
    pub edges: EdgeCounts,
}

impl ManifestCounts {
    pub fn of(graph: &PropositionGraph) -> Self {
        Self {
            entities: graph.entities().len(),
            passages: graph.passages().len(),
            propositions: graph.propositions().len(),
            edges: graph.edge_counts(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub schema_version: u32,
    /// SHA-256 over the corpus passages the index was built from.
    pub corpus_hash: String,
    /// SHA-256 over `graph.jsonl` followed by `embeddings.bin`.
    pub content_hash: String,
    pub counts: ManifestCounts,
    pub dimension: usize,
    pub tau_syn: f64,
    /// Seconds since the epoch.
    pub build_timestamp: u64,
    pub provider: String,
}

impl IndexManifest {
    pub fn describe(
        graph: &PropositionGraph,
        provider: &str,
        corpus_hash: &str,
        build_timestamp: u64,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            corpus_hash: corpus_hash.to_string(),
            content_hash: String::new(),
            counts: ManifestCounts::of(graph),
            dimension: graph.dimension(),
            tau_syn: graph.tau_syn(),
            build_timestamp,
            provider: provider.to_string(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Line {
    v: u32,
    #[serde(flatten)]
    record: Record,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Meta {
        dimension: usize,
        tau_syn: f64,
    },
    Entity {
        id: EntityId,
        key: String,
        surface: String,
        source_passages: Vec<PassageId>,
    },
    Passage {
        id: PassageId,
        key: String,
        text: String,
        propositions: Vec<PropositionId>,
    },
    Proposition {
        id: PropositionId,
        key: String,
        text: String,
        passage: PassageId,
        entities: Vec<EntityId>,
    },
    Clique(CliqueEdge),
    Containment(ContainmentEdge),
    Synonymy(SynonymyEdge),
}

fn graph_jsonl(graph: &PropositionGraph) -> Result<Vec<u8>> {
    let mut records = vec![Record::Meta {
        dimension: graph.dimension(),
        tau_syn: graph.tau_syn(),
    }];
    records.extend(graph.entities().iter().map(|e| Record::Entity {
        id: e.id,
        key: e.key.clone(),
        surface: e.surface.clone(),
        source_passages: e.source_passages.clone(),
    }));
    records.extend(graph.passages().iter().map(|p| Record::Passage {
        id: p.id,
        key: p.key.clone(),
        text: p.text.clone(),
        propositions: p.proposition_ids.clone(),
    }));
    records.extend(graph.propositions().iter().map(|q| Record::Proposition {
        id: q.id,
        key: q.key.clone(),
        text: q.text.clone(),
        passage: q.passage_id,
        entities: q.entity_ids.clone(),
    }));
    records.extend(graph.clique_edges().iter().cloned().map(Record::Clique));
    records.extend(graph.containment_edges().iter().copied().map(Record::Containment));
    records.extend(graph.synonymy_edges().iter().copied().map(Record::Synonymy));

    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, &Line { v: SCHEMA_VERSION, record })?;
        out.push(b'\n');
    }
    Ok(out)
}

fn embeddings_bin(graph: &PropositionGraph) -> Vec<u8> {
    let rows: Vec<&Embedding> = graph
        .entities()
        .iter()
        .map(|e| &e.embedding)
        .chain(graph.passages().iter().map(|p| &p.embedding))
        .chain(graph.propositions().iter().map(|q| &q.embedding))
        .collect();
    let mut out = Vec::with_capacity(16 + rows.len() * graph.dimension() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(graph.dimension() as u32).to_le_bytes());
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for row in rows {
        for &v in row.as_slice() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn content_hash(graph_bytes: &[u8], embedding_bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(graph_bytes);
    h.update(embedding_bytes);
    hex::encode(h.finalize())
}

/// Writes the three index files into `dir`, creating it if needed. Returns
/// the manifest as written, with counts and content hash filled in.
pub fn save_index(
    dir: &Path,
    graph: &PropositionGraph,
    manifest: &IndexManifest,
) -> Result<IndexManifest> {
    fs::create_dir_all(dir)?;
    let graph_bytes = graph_jsonl(graph)?;
    let emb_bytes = embeddings_bin(graph);
    let mut manifest = manifest.clone();
    manifest.schema_version = SCHEMA_VERSION;
    manifest.counts = ManifestCounts::of(graph);
    manifest.dimension = graph.dimension();
    manifest.tau_syn = graph.tau_syn();
    manifest.content_hash = content_hash(&graph_bytes, &emb_bytes);

    fs::write(dir.join(GRAPH_FILE), &graph_bytes)?;
    fs::write(dir.join(EMBEDDINGS_FILE), &emb_bytes)?;
    let mut f = fs::File::create(dir.join(MANIFEST_FILE))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    Ok(manifest)
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptIndex(msg.into())
}

fn read_embeddings(bytes: &[u8]) -> Result<(usize, Vec<Embedding>)> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(corrupt("embeddings file has a bad header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (dim, rows) = (word(4), word(8));
    if dim == 0 || bytes.len() != 16 + dim * rows * 4 {
        return Err(corrupt(format!(
            "embeddings file is {} bytes, header declares {rows} rows of dimension {dim}",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(rows);
    for chunk in bytes[16..].chunks_exact(dim * 4) {
        let values: Vec<f64> = chunk
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        out.push(Embedding::from_unit(values).map_err(|e| corrupt(e.to_string()))?);
    }
    Ok((dim, out))
}

/// Loads and verifies an index directory.
pub fn load_index(dir: &Path) -> Result<(PropositionGraph, IndexManifest)> {
    let read = |name: &str| {
        fs::read(dir.join(name)).map_err(|e| corrupt(format!("cannot read {name}: {e}")))
    };
    let manifest: IndexManifest = serde_json::from_slice(&read(MANIFEST_FILE)?)
        .map_err(|e| corrupt(format!("bad manifest: {e}")))?;
    if manifest.schema_version != SCHEMA_VERSION {
        return Err(corrupt(format!(
            "schema version {} is not supported (expected {SCHEMA_VERSION})",
            manifest.schema_version
        )));
    }
    let graph_bytes = read(GRAPH_FILE)?;
    let emb_bytes = read(EMBEDDINGS_FILE)?;
    if content_hash(&graph_bytes, &emb_bytes) != manifest.content_hash {
        return Err(corrupt("content hash does not match manifest"));
    }
    let (dim, mut rows) = read_embeddings(&emb_bytes)?;

    let mut meta = None;
    let mut entities = Vec::new();
    let mut passages = Vec::new();
    let mut propositions = Vec::new();
    let mut clique_edges = Vec::new();
    let mut containment_edges = Vec::new();
    let mut synonymy_edges = Vec::new();
    let text = std::str::from_utf8(&graph_bytes).map_err(|e| corrupt(e.to_string()))?;
    for (i, line) in text.lines().enumerate() {
        let line: Line = serde_json::from_str(line)
            .map_err(|e| corrupt(format!("{GRAPH_FILE} line {}: {e}", i + 1)))?;
        if line.v != SCHEMA_VERSION {
            return Err(corrupt(format!("{GRAPH_FILE} line {}: version {}", i + 1, line.v)));
        }
        match line.record {
            Record::Meta { dimension, tau_syn } => meta = Some((dimension, tau_syn)),
            Record::Entity {
                id,
                key,
                surface,
                source_passages,
            } => entities.push((id, key, surface, source_passages)),
            Record::Passage {
                id,
                key,
                text,
                propositions,
            } => passages.push((id, key, text, propositions)),
            Record::Proposition {
                id,
                key,
                text,
                passage,
                entities,
            } => propositions.push((id, key, text, passage, entities)),
            Record::Clique(e) => clique_edges.push(e),
            Record::Containment(e) => containment_edges.push(e),
            Record::Synonymy(e) => synonymy_edges.push(e),
        }
    }
    let (dimension, tau_syn) = meta.ok_or_else(|| corrupt("missing meta record"))?;
    if dimension != dim || dimension != manifest.dimension {
        return Err(corrupt("embedding dimension disagrees between files"));
    }
    if rows.len() != entities.len() + passages.len() + propositions.len() {
        return Err(corrupt(format!(
            "{} embedding rows for {} nodes and propositions",
            rows.len(),
            entities.len() + passages.len() + propositions.len()
        )));
    }
    let mut prop_rows = rows.split_off(entities.len() + passages.len());
    let passage_rows = rows.split_off(entities.len());
    let entity_rows = rows;

    let parts = GraphParts {
        dimension,
        tau_syn,
        entities: entities
            .into_iter()
            .zip(entity_rows)
            .map(|((id, key, surface, source_passages), embedding)| EntityNode {
                id,
                key,
                surface,
                embedding,
                source_passages,
            })
            .collect(),
        passages: passages
            .into_iter()
            .zip(passage_rows)
            .map(|((id, key, text, proposition_ids), embedding)| PassageNode {
                id,
                key,
                text,
                embedding,
                proposition_ids,
            })
            .collect(),
        propositions: propositions
            .into_iter()
            .zip(prop_rows.drain(..))
            .map(|((id, key, text, passage_id, entity_ids), embedding)| Proposition {
                id,
                key,
                text,
                entity_ids,
                passage_id,
                embedding,
            })
            .collect(),
        clique_edges,
        containment_edges,
        synonymy_edges,
    };
    let graph = PropositionGraph::from_parts(parts)?;
    if ManifestCounts::of(&graph) != manifest.counts {
        return Err(corrupt("manifest counts do not match the stored graph"));
    }
    Ok((graph, manifest))
}

/// Build time for new manifests: `SOURCE_DATE_EPOCH` when set, so that
/// rebuilding an unchanged corpus reproduces the index byte for byte.
pub fn build_timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(crate::extraction::now_secs)
}
