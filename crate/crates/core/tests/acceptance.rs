//! Acceptance suite: one pass/fail line per criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::Rng;

use propgraph::beam::{compare_paths, run_beam_search, BeamConfig, Connection, ReasoningPath, ScoreTier};
use propgraph::embedding::{EmbedRole, EmbeddingProvider, MockProvider};
use propgraph::eval::{answer_f1, recall_at_k, render_table, run_eval, write_records, EvalConfig, QueryCase};
use propgraph::extraction::{
    parse_entity_response, parse_proposition_response, render_entity_prompt,
    render_proposition_prompt,
};
use propgraph::graph::{NodeId, PropositionGraph, PropositionId};
use propgraph::index::{build_index, load_index, save_index, IndexManifest};
use propgraph::pipeline::{entity_scores_from_paths, retrieve, PipelineConfig, SeedMode};
use propgraph::ppr::{run_ppr, PprParams, SeedDistribution};
use propgraph::synthetic::planted_chain;

use common::*;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ppr_oracle() -> Outcome {
    let provider = MockProvider::new(64).unwrap();
    let mut worst: f64 = 0.0;
    let mut graphs = 0;
    let mut kinds = [0usize; 3];
    for seed in 0..24u64 {
        let mut r = rng(seed);
        let passages = r.random_range(3..=10);
        let vocab = r.random_range(8..=30);
        let (p, recs) = random_corpus(&mut r, passages, 3, vocab);
        let g = build_index(&p, &recs, &provider, 0.6).unwrap();
        let nodes = all_nodes(&g);
        if nodes.len() > 50 {
            return Err(format!("generator produced {} nodes", nodes.len()));
        }
        let c = g.edge_counts();
        kinds[0] += c.clique;
        kinds[1] += c.containment;
        kinds[2] += c.synonymy;
        let k = r.random_range(1..=nodes.len().min(5));
        let seeds: BTreeMap<NodeId, f64> = nodes
            .choose_multiple(&mut r, k)
            .map(|n| (*n, r.random_range(0.1..1.0)))
            .collect();
        let dist = SeedDistribution::from_weights(seeds.clone()).unwrap();
        for damping in [0.75, 0.45] {
            let params = PprParams {
                damping,
                tolerance: 1e-13,
                max_iterations: 10_000,
            };
            let got = run_ppr(&g, &dist, params).map_err(|e| e.to_string())?;
            let want = dense_ppr(&g, &seeds, damping);
            let total: f64 = nodes.iter().map(|n| got.get(*n).unwrap()).sum();
            check((total - 1.0).abs() <= 1e-6, || format!("graph {seed}: mass {total}"))?;
            for (i, n) in nodes.iter().enumerate() {
                worst = worst.max((got.get(*n).unwrap() - want[i]).abs());
            }
        }
        graphs += 1;
    }
    check(kinds.iter().all(|&k| k > 0), || format!("edge kinds not mixed: {kinds:?}"))?;
    check(worst <= 1e-8, || format!("L∞ {worst:.3e} > 1e-8"))?;
    Ok(format!("{graphs} graphs, dampings 0.75/0.45, max L∞ {worst:.2e}"))
}

/// Connection by precedence exact, synonymous, jump; recomputed from the
/// edge lists.
fn oracle_connection(
    g: &PropositionGraph,
    syn: &BTreeSet<(u32, u32)>,
    a: PropositionId,
    b: PropositionId,
    jumps: &[PropositionId],
) -> Option<Connection> {
    let ea = &g.proposition(a).entity_ids;
    let eb = &g.proposition(b).entity_ids;
    let mut shared: Vec<_> = ea.iter().filter(|e| eb.contains(e)).collect();
    shared.sort();
    if let Some(&&e) = shared.first() {
        return Some(Connection::Exact { entity: e });
    }
    let mut pairs = Vec::new();
    for &x in ea {
        for &y in eb {
            if syn.contains(&(x.0.min(y.0), x.0.max(y.0))) {
                pairs.push((x, y));
            }
        }
    }
    pairs.sort();
    if let Some(&(from, to)) = pairs.first() {
        return Some(Connection::Synonymous { from, to });
    }
    jumps.contains(&b).then_some(Connection::Jump)
}

fn enumerate_paths(
    g: &PropositionGraph,
    q: &[f64],
    provider: &dyn EmbeddingProvider,
    max_len: usize,
    guidance: bool,
) -> (Vec<ReasoningPath>, usize) {
    let syn: BTreeSet<(u32, u32)> = g
        .synonymy_edges()
        .iter()
        .map(|s| (s.a.0.min(s.b.0), s.a.0.max(s.b.0)))
        .collect();
    let mut ranked: Vec<(PropositionId, f64)> = g
        .propositions()
        .iter()
        .map(|p| {
            let s: f64 = p.embedding.as_slice().iter().zip(q).map(|(a, b)| a * b).sum();
            (p.id, s.clamp(-1.0, 1.0))
        })
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let jumps: Vec<PropositionId> = ranked.iter().take(3).map(|x| x.0).collect();

    let mut out = Vec::new();
    let mut prefixes = 0usize;
    let mut stack: Vec<(Vec<PropositionId>, Vec<Connection>)> =
        g.propositions().iter().map(|p| (vec![p.id], vec![])).collect();
    while let Some((props, conns)) = stack.pop() {
        prefixes += 1;
        let last = *props.last().unwrap();
        let next: Vec<(PropositionId, Connection)> = if props.len() == max_len {
            Vec::new()
        } else {
            g.propositions()
                .iter()
                .filter(|p| !props.contains(&p.id))
                .filter_map(|p| {
                    let c = oracle_connection(g, &syn, last, p.id, &jumps);
                    match (c, guidance) {
                        (Some(c), _) => Some((p.id, c)),
                        (None, false) => Some((p.id, Connection::Unlinked)),
                        (None, true) => None,
                    }
                })
                .collect()
        };
        if next.is_empty() {
            let score = path_score(g, &props, q, provider);
            out.push(ReasoningPath {
                propositions: props,
                connections: conns,
                score,
                tier: ScoreTier::Exact,
            });
        } else {
            for (n, c) in next {
                let mut p2 = props.clone();
                p2.push(n);
                let mut c2 = conns.clone();
                c2.push(c);
                stack.push((p2, c2));
            }
        }
    }
    out.sort_by(compare_paths);
    (out, prefixes)
}

fn beam_exhaustive() -> Outcome {
    let provider = MockProvider::new(256).unwrap();
    let mut fixtures = 0;
    let mut total_paths = 0;
    for seed in 0..12u64 {
        let mut r = rng(1000 + seed);
        let (p, recs) = random_corpus(&mut r, 5, 3, 12);
        let n_props: usize = recs.iter().map(|x| x.propositions.len()).sum();
        if n_props == 0 || n_props > 12 {
            continue;
        }
        let g = build_index(&p, &recs, &provider, 0.6).unwrap();
        let words: Vec<&str> = ["amber", "cedar", "ember", "iris", "marsh", "onyx"]
            .choose_multiple(&mut r, 3)
            .copied()
            .collect();
        let query = provider.embed_one(&words.join(" "), EmbedRole::Query).unwrap();
        let guidance = seed % 4 != 3;
        let (want, prefixes) = enumerate_paths(&g, query.as_slice(), &provider, 3, guidance);
        let config = BeamConfig {
            beam_width: prefixes,
            max_length: 3,
            pool_size: prefixes,
            jump_count: 3,
            graph_guidance: guidance,
        };
        let got = run_beam_search(&g, &query, &config, &provider).map_err(|e| e.to_string())?;
        let key = |p: &ReasoningPath| (p.propositions.clone(), p.connections.clone(), p.score.to_bits());
        let a: Vec<_> = got.paths.iter().map(key).collect();
        let b: Vec<_> = want.iter().map(key).collect();
        check(a == b, || {
            format!("fixture {seed}: beam returned {} paths, enumeration {}", a.len(), b.len())
        })?;
        fixtures += 1;
        total_paths += want.len();
    }
    check(fixtures >= 10, || format!("only {fixtures} usable fixtures"))?;
    Ok(format!("{fixtures} fixtures, {total_paths} terminal paths, identical rankings"))
}

/// Entity scores recomputed entity by entity: for each path, the number of
/// propositions holding the entity plus the number of synonymous
/// connections landing on it, times the clamped path score.
fn replay_scores(g: &PropositionGraph, paths: &[ReasoningPath]) -> BTreeMap<u32, f64> {
    let mut out = BTreeMap::new();
    for e in g.entities() {
        let mut total = 0.0;
        for p in paths {
            let members = p
                .propositions
                .iter()
                .filter(|q| g.proposition(**q).entity_ids.contains(&e.id))
                .count();
            let boosts = p
                .connections
                .iter()
                .filter(|c| matches!(c, Connection::Synonymous { to, .. } if *to == e.id))
                .count();
            total += (members + boosts) as f64 * p.score.max(0.0);
        }
        if paths.iter().any(|p| {
            p.propositions.iter().any(|q| g.proposition(*q).entity_ids.contains(&e.id))
        }) {
            out.insert(e.id.0, total);
        }
    }
    out
}

fn rule_replay() -> Outcome {
    let provider = MockProvider::new(64).unwrap();

    // Hand-derived cases.
    let hand = |texts: &[(&str, &[&str])], conn: Connection, s: f64| -> BTreeMap<String, f64> {
        let p: Vec<_> = texts
            .iter()
            .enumerate()
            .map(|(i, _)| propgraph::corpus::CorpusPassage {
                id: format!("d{i}"),
                title: None,
                text: format!("passage {i}"),
            })
            .collect();
        let recs: Vec<_> = texts
            .iter()
            .enumerate()
            .map(|(i, (t, es))| propgraph::extraction::ExtractionRecord {
                passage_id: format!("d{i}"),
                entities: es.iter().map(|s| s.to_string()).collect(),
                propositions: vec![propgraph::extraction::ExtractedProposition {
                    text: t.to_string(),
                    entities: es.iter().map(|s| s.to_string()).collect(),
                }],
                provenance: None,
            })
            .collect();
        let g = build_index(&p, &recs, &provider, 0.8).unwrap();
        let fix = |c: Connection| match c {
            Connection::Exact { .. } => Connection::Exact {
                entity: g.entity_by_key("x").unwrap(),
            },
            Connection::Synonymous { .. } => Connection::Synonymous {
                from: g.entity_by_key("beta gamma").unwrap(),
                to: g.entity_by_key("beta gamma delta").unwrap(),
            },
            c => c,
        };
        let path = ReasoningPath {
            propositions: vec![PropositionId(0), PropositionId(1)],
            connections: vec![fix(conn)],
            score: s,
            tier: ScoreTier::Exact,
        };
        let m = entity_scores_from_paths(&[path], &g).unwrap();
        m.iter().map(|(e, v)| (g.entity(e).key.clone(), v)).collect()
    };
    let s = 0.375;
    let exact = hand(&[("x a", &["X", "A"]), ("x b", &["X", "B"])], Connection::Exact { entity: propgraph::graph::EntityId(0) }, s);
    check(exact["x"] == 2.0 * s && exact["a"] == s && exact["b"] == s, || format!("exact case {exact:?}"))?;
    let syn = hand(
        &[("beta gamma one", &["beta gamma"]), ("beta gamma delta two", &["beta gamma delta"])],
        Connection::Synonymous { from: propgraph::graph::EntityId(0), to: propgraph::graph::EntityId(0) },
        s,
    );
    check(syn["beta gamma delta"] == 2.0 * s && syn["beta gamma"] == s, || format!("synonymy case {syn:?}"))?;

    // Randomized path sets; dyadic scores keep every sum exact.
    let mut sets = 0;
    for seed in 0..60u64 {
        let mut r = rng(5000 + seed);
        let (p, recs) = random_corpus(&mut r, 6, 3, 24);
        let g = build_index(&p, &recs, &provider, 0.6).unwrap();
        let n = g.propositions().len();
        if n < 2 {
            continue;
        }
        let syn: BTreeSet<(u32, u32)> = g
            .synonymy_edges()
            .iter()
            .map(|s| (s.a.0.min(s.b.0), s.a.0.max(s.b.0)))
            .collect();
        let mut paths = Vec::new();
        for _ in 0..r.random_range(1..6) {
            let len = r.random_range(1..=3usize.min(n));
            let ids: Vec<PropositionId> = (0..n as u32)
                .map(PropositionId)
                .collect::<Vec<_>>()
                .choose_multiple(&mut r, len)
                .copied()
                .collect();
            let conns = ids
                .windows(2)
                .map(|w| {
                    oracle_connection(&g, &syn, w[0], w[1], &[]).unwrap_or(Connection::Unlinked)
                })
                .collect();
            paths.push(ReasoningPath {
                propositions: ids,
                connections: conns,
                score: r.random_range(-16i32..64) as f64 / 64.0,
                tier: ScoreTier::Exact,
            });
        }
        let got: BTreeMap<u32, f64> = entity_scores_from_paths(&paths, &g)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|(e, v)| (e.0, v))
            .collect();
        let want = replay_scores(&g, &paths);
        check(got == want, || format!("path set {seed}: {got:?} != {want:?}"))?;
        sets += 1;
    }
    check(sets >= 50, || format!("only {sets} path sets"))?;
    Ok(format!("{sets} randomized path sets plus exact and synonymy hand cases"))
}

fn graph_soundness() -> Outcome {
    let provider = MockProvider::new(512).unwrap();
    let (_, records) = fixture_corpus();
    let g = fixture_graph(&provider);
    let mut bad = clique_violations(&g, &records);
    bad.extend(synonymy_violations(&g, 0.8));
    bad.extend(symmetry_violations(&g));
    let chain = planted_chain(0);
    let g2 = build_index(&chain.passages, &chain.records, &provider, 0.8).unwrap();
    check(g2.entities().len() <= 200, || "planted corpus too large for all-pairs".into())?;
    bad.extend(clique_violations(&g2, &chain.records));
    bad.extend(synonymy_violations(&g2, 0.8));
    bad.extend(symmetry_violations(&g2));
    check(bad.is_empty(), || bad.join("; "))?;

    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let manifest = IndexManifest::describe(&g, &provider.fingerprint(), "fixture", 0);
    save_index(&a, &g, &manifest).map_err(|e| e.to_string())?;
    let (loaded, m) = load_index(&a).map_err(|e| e.to_string())?;
    save_index(&b, &loaded, &m).map_err(|e| e.to_string())?;
    for f in ["graph.jsonl", "embeddings.bin", "manifest.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        check(x == y, || format!("{f} differs after round trip"))?;
    }
    Ok(format!(
        "fixture ({} entities, {} synonymy edges) and planted corpus ({} entities): cliques, synonymy, symmetry, byte-identical round trip",
        g.entities().len(),
        g.synonymy_edges().len(),
        g2.entities().len()
    ))
}

fn planted_ranks(config: &PipelineConfig, seed: u64, provider: &MockProvider) -> (Vec<String>, Vec<String>, String) {
    let c = planted_chain(seed);
    let g = build_index(&c.passages, &c.records, provider, 0.8).unwrap();
    let r = retrieve(&g, &c.query, 5, config, provider).unwrap();
    (r.passages.into_iter().map(|p| p.id).collect(), c.gold, c.bridge)
}

fn planted_chain_end_to_end() -> Outcome {
    let provider = MockProvider::new(4096).unwrap();
    let defaults = PipelineConfig::default();
    let mut short = PipelineConfig::default();
    short.beam.max_length = 1;
    let mut all_found = 0;
    let mut bridge_missed = 0;
    for seed in 0..10 {
        let (top, gold, _) = planted_ranks(&defaults, seed, &provider);
        if gold.iter().all(|g| top.contains(g)) {
            all_found += 1;
        }
        let (top, _, bridge) = planted_ranks(&short, seed, &provider);
        if !top.contains(&bridge) {
            bridge_missed += 1;
        }
    }
    check(all_found == 10 && bridge_missed >= 8, || {
        format!("defaults: {all_found}/10 with all gold in top 5; L_max=1 missed bridge {bridge_missed}/10")
    })?;
    Ok(format!(
        "defaults put all 3 gold in top 5 for {all_found}/10; L_max=1 misses the bridge in {bridge_missed}/10"
    ))
}

fn mean_recall(config: &PipelineConfig, provider: &MockProvider) -> Vec<f64> {
    (0..10)
        .map(|seed| {
            let (top, gold, _) = planted_ranks(config, seed, provider);
            recall_at_k(&top, &gold, 5).unwrap()
        })
        .collect()
}

fn ablations() -> Outcome {
    let provider = MockProvider::new(4096).unwrap();
    let base = PipelineConfig::default();
    let variant = |f: &dyn Fn(&mut PipelineConfig)| {
        let mut c = base.clone();
        f(&mut c);
        mean_recall(&c, &provider)
    };
    let full = mean_recall(&base, &provider);
    let unguided = variant(&|c| c.beam.graph_guidance = false);
    let explore = variant(&|c| c.seed_mode = SeedMode::ExplorationOnly);
    let exploit = variant(&|c| c.seed_mode = SeedMode::ExploitationOnly);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (m, u, x, y) = (mean(&full), mean(&unguided), mean(&explore), mean(&exploit));
    let strict = [u, x, y].iter().any(|&v| m > v);
    check(m >= u && m >= x && m >= y && strict, || {
        format!("both {m:.3}, unguided {u:.3}, exploration-only {x:.3}, exploitation-only {y:.3}")
    })?;
    Ok(format!(
        "Recall@5 default {m:.3} vs no guidance {u:.3}, exploration-only {x:.3}, exploitation-only {y:.3}"
    ))
}

fn metrics() -> Outcome {
    let ids = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let gold = ids(&["a", "b", "c"]);
    let recall_cases: [(&[&str], usize, f64); 5] = [
        (&["a", "b", "c"], 5, 1.0),
        (&["x", "y"], 5, 0.0),
        (&["a", "x", "c", "y", "z"], 5, 2.0 / 3.0),
        (&["x", "y", "z", "w", "v", "a"], 5, 0.0),
        (&["a", "x", "c", "y", "z", "b"], 6, 1.0),
    ];
    let mut n = 0;
    for (ret, k, want) in recall_cases {
        let got = recall_at_k(&ids(ret), &gold, k).unwrap();
        check(got == want, || format!("recall {ret:?}@{k}: {got} != {want}"))?;
        n += 1;
    }
    check(recall_at_k(&ids(&["a"]), &[], 5).is_err(), || "empty gold accepted".into())?;
    let f1_cases: [(&str, &[&str], f64); 7] = [
        ("The 1952", &["1952"], 1.0),
        ("1952", &["1952"], 1.0),
        ("in 1952", &["1952"], 2.0 / 3.0),
        ("Vatican City", &["1952"], 0.0),
        ("Saint Peter's Basilica", &["St. Peter's Basilica", "Saint Peters Basilica"], 1.0),
        ("a red apple pie", &["the apple tart"], 0.4),
        ("", &["an"], 1.0),
    ];
    for (pred, golds, want) in f1_cases {
        let got = answer_f1(pred, golds);
        check((got - want).abs() < 1e-12, || format!("f1 {pred:?} vs {golds:?}: {got} != {want}"))?;
        n += 1;
    }
    Ok(format!("{n} hand-computed cases including \"The 1952\" vs \"1952\""))
}

fn prompt_fidelity() -> Outcome {
    let fixture = |name: &str| {
        std::fs::read_to_string(format!("{}/fixtures/prompts/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
    };
    let passage = "Radio City\nRadio City is India's first private FM radio station and was started on 3 July 2001.\nIt plays Hindi, English and regional songs.\nRadio City recently forayed into New Media in May 2008 with the launch of a music portal\n- PlanetRadiocity.com that offers music related news, videos, songs, and other\nmusic-related features.";
    check(render_entity_prompt(passage).unwrap() == fixture("entity_radio_city.txt"), || {
        "entity prompt differs from golden".into()
    })?;
    let m1 = "In 2020, after Apple launched the M1 chip, major software companies like Adobe optimized their applications, improving performance by up to 80% compared to Intel-based Macs.";
    let entities: Vec<String> = ["Apple", "M1 chip", "2020", "Adobe", "Adobe's applications", "Intel-based Macs", "80%"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    check(
        render_proposition_prompt(m1, &entities).unwrap() == fixture("proposition_m1_chip.txt"),
        || "proposition prompt differs from golden".into(),
    )?;
    let parsed_entities = parse_entity_response(&fixture("entity_radio_city_response.json")).map_err(|e| e.to_string())?;
    let want_entities = [
        "Radio City", "India", "private FM radio station", "3 July 2001", "Hindi", "English",
        "New Media", "May 2008", "PlanetRadiocity.com", "music portal", "news", "videos", "songs",
    ];
    check(parsed_entities == want_entities, || format!("entities {parsed_entities:?}"))?;
    let parsed = parse_proposition_response(&fixture("proposition_m1_chip_response.json"), &entities)
        .map_err(|e| e.to_string())?;
    check(parsed.propositions.len() == 3 && parsed.diagnostics.removed_entities == 0, || {
        format!("{} propositions", parsed.propositions.len())
    })?;
    let first: BTreeSet<&str> = parsed.propositions[0].entities.iter().map(String::as_str).collect();
    check(first == BTreeSet::from(["Apple", "M1 chip", "2020"]), || format!("first proposition {first:?}"))?;
    Ok("both prompts byte-match; demonstration responses parse into the demonstrated records".into())
}

fn end_to_end_report() -> Vec<u8> {
    let provider = MockProvider::new(512).unwrap();
    let (passages, records) = fixture_corpus();
    let g = build_index(&passages, &records, &provider, 0.8).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = IndexManifest::describe(&g, &provider.fingerprint(), "fixture", 0);
    save_index(dir.path(), &g, &manifest).unwrap();
    let mut out = Vec::new();
    for f in ["graph.jsonl", "embeddings.bin", "manifest.json"] {
        out.extend(std::fs::read(dir.path().join(f)).unwrap());
    }
    let (g, _) = load_index(dir.path()).unwrap();
    let mut cases: Vec<QueryCase> = Vec::new();
    for (i, p) in g.propositions().iter().take(20).enumerate() {
        cases.push(QueryCase {
            id: format!("q{i:02}"),
            query: p.text.clone(),
            gold_passage_ids: vec![g.passage(p.passage_id).key.clone()],
            answers: vec![],
        });
    }
    let report = run_eval(&g, &cases, &PipelineConfig::default(), &EvalConfig::default(), &provider, &BTreeMap::new(), "default")
        .unwrap();
    out.extend(render_table(std::slice::from_ref(&report)).into_bytes());
    write_records(&mut out, &[report]).unwrap();
    out
}

fn determinism() -> Outcome {
    let a = end_to_end_report();
    let b = end_to_end_report();
    check(a == b, || "reports differ between runs".into())?;
    Ok(format!("two runs (index + 20 queries) produced identical {}-byte reports", a.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("PPR oracle equivalence", ppr_oracle, Duration::from_secs(5)),
        ("beam exhaustive equivalence", beam_exhaustive, Duration::from_secs(10)),
        ("entity score rule replay", rule_replay, Duration::MAX),
        ("graph construction soundness", graph_soundness, Duration::MAX),
        ("planted chain end to end", planted_chain_end_to_end, Duration::from_secs(30)),
        ("ablation directions", ablations, Duration::MAX),
        ("metric correctness", metrics, Duration::MAX),
        ("prompt fidelity", prompt_fidelity, Duration::MAX),
        ("determinism", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let mut result = f();
        let elapsed = t.elapsed();
        if result.is_ok() && elapsed > *limit {
            result = Err(format!("took {:.2}s, limit {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()));
        }
        match result {
            Ok(msg) => println!("criterion {}: {name}: PASS ({msg}) [{:.2}s]", i + 1, elapsed.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: {name}: FAIL ({msg}) [{:.2}s]", i + 1, elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
