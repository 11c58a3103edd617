//! Passage Recall@k and token-level answer F1 over query sets.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::read_jsonl;
use crate::embedding::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::graph::PropositionGraph;
use crate::pipeline::{retrieve_with_deadline, PipelineConfig};

pub const DEFAULT_CASE_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCase {
    pub id: String,
    pub query: String,
    pub gold_passage_ids: Vec<String>,
    #[serde(default)]
    pub answers: Vec<String>,
}

/// |top-k ∩ gold| / |gold|. Duplicate ids count once on both sides.
pub fn recall_at_k<S: AsRef<str>>(retrieved: &[S], gold: &[String], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    let gold: HashSet<&str> = gold.iter().map(String::as_str).collect();
    if gold.is_empty() {
        return Err(Error::EmptyGold);
    }
    let top: HashSet<&str> = retrieved.iter().take(k).map(AsRef::as_ref).collect();
    let hit = gold.iter().filter(|g| top.contains(*g)).count();
    Ok(hit as f64 / gold.len() as f64)
}

/// Lowercase, drop ASCII punctuation, drop the articles a/an/the, and
/// collapse whitespace.
pub fn normalize_answer(s: &str) -> String {
    let lower = s.to_lowercase();
    let no_punct: String = lower.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    no_punct
        .split_whitespace()
        .filter(|t| !matches!(*t, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn token_f1(pred: &str, gold: &str) -> f64 {
    let p = normalize_answer(pred);
    let g = normalize_answer(gold);
    let pt: Vec<&str> = p.split_whitespace().collect();
    let gt: Vec<&str> = g.split_whitespace().collect();
    if pt.is_empty() || gt.is_empty() {
        return if pt.is_empty() && gt.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &gt {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &pt {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pt.len() as f64;
    let recall = common as f64 / gt.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best token F1 of `predicted` against any gold answer; 0 with no golds.
pub fn answer_f1<S: AsRef<str>>(predicted: &str, golds: &[S]) -> f64 {
    golds
        .iter()
        .map(|g| token_f1(predicted, g.as_ref()))
        .fold(0.0, f64::max)
}

pub fn parse_cases<R: BufRead>(reader: R) -> Result<Vec<QueryCase>> {
    let (rows, _) = read_jsonl::<QueryCase, _>(reader, true)?;
    let mut seen = HashSet::new();
    let mut cases = Vec::with_capacity(rows.len());
    for (line, case) in rows {
        if case.id.trim().is_empty() || case.query.trim().is_empty() {
            return Err(Error::InvalidRecord {
                line,
                reason: "case id and query must be non-empty".into(),
            });
        }
        if !seen.insert(case.id.clone()) {
            return Err(Error::InvalidRecord {
                line,
                reason: format!("duplicate case id `{}`", case.id),
            });
        }
        cases.push(case);
    }
    if cases.is_empty() {
        return Err(Error::EmptyCases);
    }
    Ok(cases)
}

pub fn read_cases(path: &Path) -> Result<Vec<QueryCase>> {
    parse_cases(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PredictionLine {
    id: String,
    prediction: String,
}

/// Reader predictions, one `{id, prediction}` record per line.
pub fn read_predictions(path: &Path) -> Result<BTreeMap<String, String>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let (rows, _) = read_jsonl::<PredictionLine, _>(file, true)?;
    Ok(rows.into_iter().map(|(_, p)| (p.id, p.prediction)).collect())
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub k: usize,
    pub parallelism: usize,
    pub case_timeout: Duration,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 5,
            parallelism: 4,
            case_timeout: DEFAULT_CASE_TIMEOUT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub id: String,
    pub retrieved: Vec<String>,
    /// 0 for failed cases.
    pub recall: f64,
    /// Present when the case has gold answers and a prediction was supplied.
    pub f1: Option<f64>,
    pub error: Option<String>,
}

/// Wall-clock figures; kept out of the serialized report so that reports
/// stay reproducible.
#[derive(Debug, Clone, Default)]
pub struct RuntimeStats {
    pub total: Duration,
    pub mean_case: Duration,
    pub max_case: Duration,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub setting: String,
    pub k: usize,
    pub config: PipelineConfig,
    pub cases: Vec<CaseOutcome>,
    pub mean_recall: f64,
    pub mean_f1: Option<f64>,
    pub failed: usize,
    #[serde(skip)]
    pub runtime: RuntimeStats,
}

fn evaluate_case(
    graph: &PropositionGraph,
    case: &QueryCase,
    config: &PipelineConfig,
    eval: &EvalConfig,
    provider: &dyn EmbeddingProvider,
    predictions: &BTreeMap<String, String>,
) -> CaseOutcome {
    let f1 = match predictions.get(&case.id) {
        Some(p) if !case.answers.is_empty() => Some(answer_f1(p, &case.answers)),
        _ => None,
    };
    let failed = |e: Error| CaseOutcome {
        id: case.id.clone(),
        retrieved: Vec::new(),
        recall: 0.0,
        f1,
        error: Some(e.to_string()),
    };
    if let Some(g) = case
        .gold_passage_ids
        .iter()
        .find(|g| graph.passage_by_key(g).is_none())
    {
        return failed(Error::UnknownPassage(g.clone()));
    }
    let deadline = Instant::now() + eval.case_timeout;
    let result = retrieve_with_deadline(graph, &case.query, eval.k, config, provider, Some(deadline))
        .and_then(|r| {
            let ids: Vec<String> = r.passages.into_iter().map(|p| p.id).collect();
            let recall = recall_at_k(&ids, &case.gold_passage_ids, eval.k)?;
            Ok((ids, recall))
        });
    match result {
        Ok((retrieved, recall)) => CaseOutcome {
            id: case.id.clone(),
            retrieved,
            recall,
            f1,
            error: None,
        },
        Err(e) => failed(e),
    }
}

/// Evaluates every case; a failing case is recorded and scored 0 rather
/// than aborting the run. Outcomes are ordered by case id.
pub fn run_eval(
    graph: &PropositionGraph,
    cases: &[QueryCase],
    config: &PipelineConfig,
    eval: &EvalConfig,
    provider: &dyn EmbeddingProvider,
    predictions: &BTreeMap<String, String>,
    setting: &str,
) -> Result<EvalReport> {
    if cases.is_empty() {
        return Err(Error::EmptyCases);
    }
    if eval.k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(eval.parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let started = Instant::now();
    let mut timed: Vec<(CaseOutcome, Duration)> = pool.install(|| {
        cases
            .par_iter()
            .map(|c| {
                let t = Instant::now();
                let out = evaluate_case(graph, c, config, eval, provider, predictions);
                (out, t.elapsed())
            })
            .collect()
    });
    let total = started.elapsed();
    timed.sort_by(|a, b| a.0.id.cmp(&b.0.id));

    let n = timed.len();
    let max_case = timed.iter().map(|(_, d)| *d).max().unwrap_or_default();
    let mean_case = timed.iter().map(|(_, d)| *d).sum::<Duration>() / n as u32;
    let cases: Vec<CaseOutcome> = timed.into_iter().map(|(c, _)| c).collect();
    let mean_recall = cases.iter().map(|c| c.recall).sum::<f64>() / n as f64;
    let f1s: Vec<f64> = cases.iter().filter_map(|c| c.f1).collect();
    let mean_f1 = (!f1s.is_empty()).then(|| f1s.iter().sum::<f64>() / f1s.len() as f64);
    let failed = cases.iter().filter(|c| c.error.is_some()).count();
    Ok(EvalReport {
        setting: setting.to_string(),
        k: eval.k,
        config: config.clone(),
        cases,
        mean_recall,
        mean_f1,
        failed,
        runtime: RuntimeStats {
            total,
            mean_case,
            max_case,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    MaxLength,
    BeamWidth,
}

/// A parameter and the values to evaluate it at, e.g. `lmax=1,2,3,4`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<usize>,
}

impl std::str::FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidConfig(format!("bad sweep `{s}`: {m}"));
        let (name, values) = s.split_once('=').ok_or_else(|| bad("expected NAME=V1,V2"))?;
        let param = match name.trim() {
            "lmax" | "max_length" => SweepParam::MaxLength,
            "beam" | "beam_width" => SweepParam::BeamWidth,
            other => return Err(bad(&format!("unknown parameter `{other}`"))),
        };
        let values = values
            .split(',')
            .map(|v| v.trim().parse::<usize>().map_err(|_| bad("values must be integers")))
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() || values.contains(&0) {
            return Err(bad("values must be >= 1"));
        }
        Ok(Sweep { param, values })
    }
}

impl Sweep {
    fn apply(&self, base: &PipelineConfig, v: usize) -> (PipelineConfig, String) {
        let mut cfg = base.clone();
        let (name, default) = match self.param {
            SweepParam::MaxLength => {
                cfg.beam.max_length = v;
                ("L_max", PipelineConfig::default().beam.max_length)
            }
            SweepParam::BeamWidth => {
                cfg.beam.beam_width = v;
                ("B", PipelineConfig::default().beam.beam_width)
            }
        };
        let label = if v == default {
            format!("{name}={v} (default)")
        } else {
            format!("{name}={v}")
        };
        (cfg, label)
    }
}

pub fn run_sweep(
    graph: &PropositionGraph,
    cases: &[QueryCase],
    base: &PipelineConfig,
    sweep: &Sweep,
    eval: &EvalConfig,
    provider: &dyn EmbeddingProvider,
    predictions: &BTreeMap<String, String>,
) -> Result<Vec<EvalReport>> {
    sweep
        .values
        .iter()
        .map(|&v| {
            let (cfg, label) = sweep.apply(base, v);
            run_eval(graph, cases, &cfg, eval, provider, predictions, &label)
        })
        .collect()
}

/// One row per report: setting, case count, failures, mean recall, mean F1.
pub fn render_table(reports: &[EvalReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.setting.chars().count())
        .max()
        .unwrap_or(0)
        .max("setting".len());
    let k = reports.first().map_or(5, |r| r.k);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>5}  {:>6}  {:>9}  {:>6}",
        "setting",
        "cases",
        "failed",
        format!("recall@{k}"),
        "f1"
    );
    for r in reports {
        let f1 = r.mean_f1.map_or("-".to_string(), |f| format!("{f:.4}"));
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>6}  {:>9.4}  {:>6}",
            r.setting,
            r.cases.len(),
            r.failed,
            r.mean_recall,
            f1
        );
    }
    out
}

#[derive(Serialize)]
struct RecordLine<'a> {
    setting: &'a str,
    k: usize,
    #[serde(flatten)]
    case: &'a CaseOutcome,
}

/// Per-case records, one JSON object per line, tagged with the setting.
pub fn write_records<W: Write>(mut out: W, reports: &[EvalReport]) -> Result<()> {
    for r in reports {
        for c in &r.cases {
            let line = RecordLine {
                setting: &r.setting,
                k: r.k,
                case: c,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}
