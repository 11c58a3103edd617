//! Python bindings: index build/load/save, retrieval, metrics and the
//! extraction prompts.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyTimeoutError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use propgraph::config::RunConfigFile;
use propgraph::corpus::{corpus_hash, read_corpus};
use propgraph::embedding::EmbeddingProvider;
use propgraph::eval;
use propgraph::extraction::{self, load_records};
use propgraph::graph::PropositionGraph;
use propgraph::index::{build_index, build_timestamp, load_index, save_index, IndexManifest};
use propgraph::pipeline::{render_path, retrieve};
use propgraph::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::Timeout => PyTimeoutError::new_err(e.to_string()),
        Error::InvalidConfig(_) | Error::EmptyInput(_) | Error::EmptyGold | Error::EmptyCases => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn load_config(path: Option<PathBuf>) -> PyResult<RunConfigFile> {
    match path {
        Some(p) => RunConfigFile::load(&p).map_err(py_err),
        None => Ok(RunConfigFile::default()),
    }
}

/// A loaded proposition graph together with the embedding provider it was
/// built with.
#[pyclass(frozen, module = "propgraph_py")]
struct Index {
    graph: PropositionGraph,
    manifest: IndexManifest,
    provider: Arc<dyn EmbeddingProvider>,
    config: RunConfigFile,
}

#[pymethods]
impl Index {
    /// Builds an index from a corpus JSONL file and its extraction records.
    #[staticmethod]
    #[pyo3(signature = (corpus, records, dimension=None, tau_syn=None, config=None))]
    fn build(
        py: Python<'_>,
        corpus: PathBuf,
        records: PathBuf,
        dimension: Option<usize>,
        tau_syn: Option<f64>,
        config: Option<PathBuf>,
    ) -> PyResult<Self> {
        let mut config = load_config(config)?;
        if let Some(d) = dimension {
            config.provider.dimension = d;
        }
        if let Some(t) = tau_syn {
            config.index.tau_syn = t;
        }
        config.validate().map_err(py_err)?;
        py.detach(|| {
            let corpus = read_corpus(&corpus, false)?;
            let records = load_records(&records)?;
            let provider = config.provider.build()?;
            let graph = build_index(&corpus.passages, &records, provider.as_ref(), config.index.tau_syn)?;
            let manifest = IndexManifest::describe(
                &graph,
                &provider.fingerprint(),
                &corpus_hash(&corpus.passages),
                build_timestamp(),
            );
            Ok(Self {
                graph,
                manifest,
                provider,
                config,
            })
        })
        .map_err(py_err)
    }

    /// Loads an index directory written by `save` or `propgraph index`.
    #[staticmethod]
    #[pyo3(signature = (path, config=None))]
    fn load(path: PathBuf, config: Option<PathBuf>) -> PyResult<Self> {
        let mut config = load_config(config)?;
        let (graph, manifest) = load_index(&path).map_err(py_err)?;
        config.provider.dimension = manifest.dimension;
        let provider = config.provider.build().map_err(py_err)?;
        if provider.fingerprint() != manifest.provider {
            return Err(PyValueError::new_err(format!(
                "index was built with provider `{}`, configured provider is `{}`",
                manifest.provider,
                provider.fingerprint()
            )));
        }
        Ok(Self {
            graph,
            manifest,
            provider,
            config,
        })
    }

    /// Writes the index to `path`; returns the content hash.
    fn save(&self, path: PathBuf) -> PyResult<String> {
        let m = save_index(&path, &self.graph, &self.manifest).map_err(py_err)?;
        Ok(m.content_hash)
    }

    /// Node and edge counts.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = self.graph.edge_counts();
        let d = PyDict::new(py);
        d.set_item("propositions", self.graph.propositions().len())?;
        d.set_item("passages", self.graph.passages().len())?;
        d.set_item("entities", self.graph.entities().len())?;
        d.set_item("edges", c.total())?;
        d.set_item("clique_edges", c.clique)?;
        d.set_item("containment_edges", c.containment)?;
        d.set_item("synonymy_edges", c.synonymy)?;
        Ok(d)
    }

    /// Ranks passages for `query`. Returns `(passage_id, score)` pairs, or
    /// with `explain=True` a pair of that list and the rendered reasoning
    /// paths.
    #[pyo3(signature = (query, k=5, max_length=None, beam_width=None, seed_mode=None, graph_guidance=None, explain=false))]
    #[allow(clippy::too_many_arguments)]
    fn retrieve<'py>(
        &self,
        py: Python<'py>,
        query: &str,
        k: usize,
        max_length: Option<usize>,
        beam_width: Option<usize>,
        seed_mode: Option<&str>,
        graph_guidance: Option<bool>,
        explain: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut cfg = self.config.pipeline.clone();
        if let Some(l) = max_length {
            cfg.beam.max_length = l;
        }
        if let Some(b) = beam_width {
            cfg.beam.beam_width = b;
        }
        if let Some(m) = seed_mode {
            cfg.seed_mode = m.parse().map_err(py_err)?;
        }
        if let Some(g) = graph_guidance {
            cfg.beam.graph_guidance = g;
        }
        let r = py
            .detach(|| retrieve(&self.graph, query, k, &cfg, self.provider.as_ref()))
            .map_err(py_err)?;
        let ranked: Vec<(String, f64)> = r.passages.iter().map(|p| (p.id.clone(), p.score)).collect();
        if explain {
            let paths: Vec<String> = r.paths.iter().map(|p| render_path(&self.graph, p)).collect();
            Ok((ranked, paths).into_pyobject(py)?.into_any())
        } else {
            Ok(ranked.into_pyobject(py)?.into_any())
        }
    }

    /// Text of a passage by corpus id.
    fn passage_text(&self, id: &str) -> PyResult<String> {
        let p = self
            .graph
            .passage_by_key(id)
            .ok_or_else(|| PyValueError::new_err(format!("unknown passage `{id}`")))?;
        Ok(self.graph.passage(p).text.clone())
    }

    fn __repr__(&self) -> String {
        format!(
            "Index(passages={}, propositions={}, entities={})",
            self.graph.passages().len(),
            self.graph.propositions().len(),
            self.graph.entities().len()
        )
    }
}

#[pyfunction]
fn recall_at_k(retrieved: Vec<String>, gold: Vec<String>, k: usize) -> PyResult<f64> {
    eval::recall_at_k(&retrieved, &gold, k).map_err(py_err)
}

#[pyfunction]
fn answer_f1(prediction: &str, golds: Vec<String>) -> f64 {
    eval::answer_f1(prediction, &golds)
}

#[pyfunction]
fn normalize_answer(text: &str) -> String {
    eval::normalize_answer(text)
}

#[pyfunction]
fn render_entity_prompt(passage: &str) -> PyResult<String> {
    extraction::render_entity_prompt(passage).map_err(py_err)
}

#[pyfunction]
fn render_proposition_prompt(passage: &str, entities: Vec<String>) -> PyResult<String> {
    extraction::render_proposition_prompt(passage, &entities).map_err(py_err)
}

#[pyfunction]
fn parse_entity_response(response: &str) -> PyResult<Vec<String>> {
    extraction::parse_entity_response(response).map_err(py_err)
}

/// Parses a proposition response into `(text, entities)` pairs, keeping
/// only entities from `allowed`.
#[pyfunction]
fn parse_proposition_response(response: &str, allowed: Vec<String>) -> PyResult<Vec<(String, Vec<String>)>> {
    let parsed = extraction::parse_proposition_response(response, &allowed).map_err(py_err)?;
    Ok(parsed.propositions.into_iter().map(|p| (p.text, p.entities)).collect())
}

/// Writes the synthetic three-hop corpus for `seed` into `dir` as
/// `corpus.jsonl` and `records.jsonl`; returns the query and gold ids.
#[pyfunction]
fn write_planted_chain(dir: PathBuf, seed: u64) -> PyResult<(String, Vec<String>)> {
    let chain = propgraph::synthetic::planted_chain(seed);
    std::fs::create_dir_all(&dir)?;
    let mut body = String::new();
    for p in &chain.passages {
        body.push_str(&serde_json::to_string(p).map_err(|e| PyRuntimeError::new_err(e.to_string()))?);
        body.push('\n');
    }
    std::fs::write(dir.join("corpus.jsonl"), body)?;
    extraction::save_records(&dir.join("records.jsonl"), &chain.records).map_err(py_err)?;
    Ok((chain.query, chain.gold))
}

#[pymodule]
fn propgraph_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Index>()?;
    m.add_function(wrap_pyfunction!(recall_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(answer_f1, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_answer, m)?)?;
    m.add_function(wrap_pyfunction!(render_entity_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(render_proposition_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(parse_entity_response, m)?)?;
    m.add_function(wrap_pyfunction!(parse_proposition_response, m)?)?;
    m.add_function(wrap_pyfunction!(write_planted_chain, m)?)?;
    Ok(())
}
