use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use propgraph::config::RunConfigFile;
use propgraph::corpus::{corpus_hash, read_corpus, read_jsonl, Corpus};
use propgraph::embedding::EmbeddingProvider;
use propgraph::eval::{
    read_cases, read_predictions, render_table, run_eval, run_sweep, write_records, EvalConfig,
    Sweep,
};
use propgraph::extraction::{
    ingest_corpus, load_records, save_records, CachedLlm, ChatClient, ChatConfig, ExtractionRecord,
    LlmClient,
};
use propgraph::graph::PropositionGraph;
use propgraph::index::{build_index, build_timestamp, load_index, save_index, IndexManifest};
use propgraph::pipeline::{render_path, retrieve, PipelineConfig, RankedResult, SeedMode};
use propgraph::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_PROVIDER: u8 = 3;

#[derive(Parser)]
#[command(name = "propgraph", version, about = "Proposition-graph multi-hop passage retrieval")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract (or load), embed, build and save an index.
    Index(IndexArgs),
    /// Retrieve passages for a query.
    Query(QueryArgs),
    /// Recall@k and answer F1 over a case file.
    Eval(EvalArgs),
    /// Graph statistics of a saved index.
    Stats(StatsArgs),
    /// Run LLM extraction only and write fixture-format records.
    Extract(ExtractArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Corpus file, one `{id, title?, text}` record per line.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Pre-extracted records; skips the LLM.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Fail on malformed corpus lines instead of skipping them.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    tau_syn: Option<f64>,
    #[arg(long)]
    dimension: Option<usize>,
}

#[derive(Args, Clone)]
struct RetrievalFlags {
    #[arg(long)]
    lmax: Option<usize>,
    #[arg(long)]
    beam_width: Option<usize>,
    /// both, exploration-only or exploitation-only.
    #[arg(long)]
    seed_mode: Option<SeedMode>,
    #[arg(long)]
    no_graph_guidance: bool,
}

impl RetrievalFlags {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(v) = self.lmax {
            cfg.beam.max_length = v;
        }
        if let Some(v) = self.beam_width {
            cfg.beam.beam_width = v;
        }
        if let Some(v) = self.seed_mode {
            cfg.seed_mode = v;
        }
        if self.no_graph_guidance {
            cfg.beam.graph_guidance = false;
        }
    }
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    /// Query text; omit with --batch.
    query: Option<String>,
    /// File of `{id, query}` records answered concurrently.
    #[arg(long, conflicts_with = "query")]
    batch: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Print the reasoning paths.
    #[arg(long)]
    explain: bool,
    /// Print retrieval diagnostics (seeds, PPR summaries) as JSON.
    #[arg(long)]
    dump_scores: bool,
    #[command(flatten)]
    flags: RetrievalFlags,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    index: PathBuf,
    /// Case file, one `{id, query, gold_passage_ids, answers?}` per line.
    #[arg(long)]
    cases: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Parameter sweep such as `lmax=1,2,3,4` or `beam=1,2,4,8`.
    #[arg(long)]
    sweep: Option<Sweep>,
    /// Reader predictions, one `{id, prediction}` per line.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Per-case records (JSONL).
    #[arg(long)]
    records_out: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    timeout_secs: u64,
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    #[command(flatten)]
    flags: RetrievalFlags,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    index: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    model: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_provider_error() {
        EXIT_PROVIDER
    } else if matches!(e, Error::InvalidConfig(_) | Error::Toml(_) | Error::EmptyInput(_)) {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

fn run(cli: Cli) -> propgraph::Result<()> {
    let config = match &cli.config {
        Some(p) => RunConfigFile::load(p)?,
        None => RunConfigFile::default(),
    };
    match cli.command {
        Command::Index(a) => cmd_index(a, config),
        Command::Query(a) => cmd_query(a, config),
        Command::Eval(a) => cmd_eval(a, config),
        Command::Stats(a) => cmd_stats(a),
        Command::Extract(a) => cmd_extract(a, config),
    }
}

fn load_corpus(path: &Path, strict: bool) -> propgraph::Result<Corpus> {
    let corpus = read_corpus(path, strict)?;
    for s in &corpus.skipped {
        eprintln!("{}:{}: skipped: {}", path.display(), s.line, s.reason);
    }
    Ok(corpus)
}

fn llm_client(config: &RunConfigFile, model: Option<&str>) -> propgraph::Result<Arc<dyn LlmClient>> {
    let model = model.unwrap_or(&config.llm.model);
    let chat = match &config.llm.endpoint {
        Some(endpoint) => ChatConfig {
            endpoint: endpoint.clone(),
            token: std::env::var("PROPRAG_LLM_TOKEN").ok(),
            model: model.to_string(),
            timeout: Duration::from_secs(config.llm.timeout_secs),
        },
        None => ChatConfig {
            timeout: Duration::from_secs(config.llm.timeout_secs),
            ..ChatConfig::from_env(model)?
        },
    };
    let client = ChatClient::new(chat)?;
    Ok(match &config.llm.cache_path {
        Some(p) => Arc::new(CachedLlm::open(client, Path::new(p))?),
        None => Arc::new(client),
    })
}

fn extract_all(
    corpus: &Corpus,
    config: &RunConfigFile,
    model: Option<&str>,
) -> propgraph::Result<Vec<ExtractionRecord>> {
    let llm = llm_client(config, model)?;
    let report = ingest_corpus(llm.as_ref(), &corpus.passages, &config.llm.extraction())?;
    for f in &report.failures {
        eprintln!("extraction failed for `{}`: {}", f.passage_id, f.error);
    }
    Ok(report.records)
}

fn cmd_index(a: IndexArgs, mut config: RunConfigFile) -> propgraph::Result<()> {
    if let Some(t) = a.tau_syn {
        config.index.tau_syn = t;
    }
    if let Some(d) = a.dimension {
        config.provider.dimension = d;
    }
    config.validate()?;
    let corpus = load_corpus(&a.corpus, a.strict)?;
    let records = match &a.records {
        Some(p) => load_records(p)?,
        None => extract_all(&corpus, &config, None)?,
    };
    let provider = config.provider.build()?;
    let graph = build_index(&corpus.passages, &records, provider.as_ref(), config.index.tau_syn)?;
    let manifest = IndexManifest::describe(
        &graph,
        &provider.fingerprint(),
        &corpus_hash(&corpus.passages),
        build_timestamp(),
    );
    let manifest = save_index(&a.out, &graph, &manifest)?;
    let c = &manifest.counts;
    println!(
        "indexed {} passages: {} propositions, {} entities, {} edges ({} clique, {} containment, {} synonymy)",
        c.passages,
        c.propositions,
        c.entities,
        c.edges.total(),
        c.edges.clique,
        c.edges.containment,
        c.edges.synonymy
    );
    if !corpus.skipped.is_empty() {
        println!("{} corpus line(s) skipped", corpus.skipped.len());
    }
    println!("content hash {}", manifest.content_hash);
    Ok(())
}

/// Loads an index and a provider matching the one it was built with.
fn open_index(
    dir: &Path,
    config: &mut RunConfigFile,
) -> propgraph::Result<(PropositionGraph, Arc<dyn EmbeddingProvider>)> {
    let (graph, manifest) = load_index(dir)?;
    config.provider.dimension = manifest.dimension;
    let provider = config.provider.build()?;
    if provider.fingerprint() != manifest.provider {
        return Err(Error::CorruptIndex(format!(
            "index was built with provider `{}`, configured provider is `{}`",
            manifest.provider,
            provider.fingerprint()
        )));
    }
    Ok((graph, provider))
}

#[derive(Deserialize)]
struct BatchQuery {
    id: String,
    query: String,
}

#[derive(Serialize)]
struct BatchAnswer<'a> {
    id: &'a str,
    passages: Vec<(&'a str, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn print_result(
    out: &mut impl Write,
    graph: &PropositionGraph,
    r: &RankedResult,
    explain: bool,
    dump: bool,
) -> propgraph::Result<()> {
    for (i, p) in r.passages.iter().enumerate() {
        let text = graph.passage(p.passage).text.replace('\n', " ");
        writeln!(out, "{}. {} {:.6} {}", i + 1, p.id, p.score, text)?;
    }
    if explain {
        if r.paths.is_empty() {
            writeln!(out, "no reasoning paths")?;
        }
        for p in &r.paths {
            writeln!(out, "{}", render_path(graph, p))?;
        }
    }
    if dump {
        serde_json::to_writer_pretty(&mut *out, &r.diagnostics)?;
        writeln!(out)?;
    }
    Ok(())
}

fn cmd_query(a: QueryArgs, mut config: RunConfigFile) -> propgraph::Result<()> {
    a.flags.apply(&mut config.pipeline);
    config.validate()?;
    if a.k == 0 {
        return Err(Error::InvalidConfig("--k must be >= 1".into()));
    }
    let (graph, provider) = open_index(&a.index, &mut config)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match (&a.query, &a.batch) {
        (Some(q), None) => {
            let r = retrieve(&graph, q, a.k, &config.pipeline, provider.as_ref())?;
            print_result(&mut out, &graph, &r, a.explain, a.dump_scores)?;
        }
        (None, Some(path)) => {
            let file = BufReader::new(fs::File::open(path)?);
            let (rows, _) = read_jsonl::<BatchQuery, _>(file, true)?;
            let results: Vec<_> = rows
                .par_iter()
                .map(|(_, q)| retrieve(&graph, &q.query, a.k, &config.pipeline, provider.as_ref()))
                .collect();
            for ((_, q), r) in rows.iter().zip(&results) {
                let answer = match r {
                    Ok(r) => BatchAnswer {
                        id: &q.id,
                        passages: r.passages.iter().map(|p| (p.id.as_str(), p.score)).collect(),
                        error: None,
                    },
                    Err(e) => BatchAnswer {
                        id: &q.id,
                        passages: Vec::new(),
                        error: Some(e.to_string()),
                    },
                };
                serde_json::to_writer(&mut out, &answer)?;
                writeln!(out)?;
            }
        }
        _ => return Err(Error::InvalidConfig("give a query or --batch FILE".into())),
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs, mut config: RunConfigFile) -> propgraph::Result<()> {
    a.flags.apply(&mut config.pipeline);
    config.validate()?;
    let eval = EvalConfig {
        k: a.k,
        parallelism: a.parallelism,
        case_timeout: Duration::from_secs(a.timeout_secs),
    };
    let (graph, provider) = open_index(&a.index, &mut config)?;
    let cases = read_cases(&a.cases)?;
    let predictions = match &a.predictions {
        Some(p) => read_predictions(p)?,
        None => BTreeMap::new(),
    };
    let started = Instant::now();
    let reports = match &a.sweep {
        Some(s) => run_sweep(&graph, &cases, &config.pipeline, s, &eval, provider.as_ref(), &predictions)?,
        None => vec![run_eval(
            &graph,
            &cases,
            &config.pipeline,
            &eval,
            provider.as_ref(),
            &predictions,
            "default",
        )?],
    };
    print!("{}", render_table(&reports));
    for r in &reports {
        for c in r.cases.iter().filter(|c| c.error.is_some()) {
            eprintln!("[{}] case `{}` failed: {}", r.setting, c.id, c.error.as_deref().unwrap_or(""));
        }
        eprintln!(
            "[{}] {:.3}s total, {:.1}ms mean per case, {:.1}ms max",
            r.setting,
            r.runtime.total.as_secs_f64(),
            r.runtime.mean_case.as_secs_f64() * 1e3,
            r.runtime.max_case.as_secs_f64() * 1e3
        );
    }
    eprintln!("eval finished in {:.3}s", started.elapsed().as_secs_f64());
    if let Some(p) = &a.records_out {
        write_records(std::io::BufWriter::new(fs::File::create(p)?), &reports)?;
    }
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> propgraph::Result<()> {
    let (_, manifest) = load_index(&a.index)?;
    let c = &manifest.counts;
    let rows = [
        ("# Propositions", c.propositions),
        ("# Passage Nodes", c.passages),
        ("# Entity Nodes", c.entities),
        ("# Total Edges", c.edges.total()),
    ];
    println!("{:<20} {:>12}", "Statistic", "Value");
    for (name, v) in rows {
        println!("{name:<20} {v:>12}");
    }
    println!("{:<20} {:>12}", "  clique", c.edges.clique);
    println!("{:<20} {:>12}", "  containment", c.edges.containment);
    println!("{:<20} {:>12}", "  synonymy", c.edges.synonymy);
    Ok(())
}

fn cmd_extract(a: ExtractArgs, config: RunConfigFile) -> propgraph::Result<()> {
    config.validate()?;
    let corpus = load_corpus(&a.corpus, a.strict)?;
    let records = extract_all(&corpus, &config, a.model.as_deref())?;
    save_records(&a.out, &records)?;
    println!("wrote {} records to {}", records.len(), a.out.display());
    Ok(())
}
