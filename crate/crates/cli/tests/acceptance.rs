//! Acceptance criteria, run in order with one PASS/FAIL line each. Exits
//! non-zero if any criterion fails or exceeds its time budget.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lirlab::decoder::{paragraph_to_query_eval, round_trip_eval};
use lirlab::embedding::tokenize_str;
use lirlab::eval::{evaluate, EvalOptions};
use lirlab::metrics::{ndcg_for_ranking, self_bleu, EvalReport, NGramLm};
use lirlab::suggest::{relevance_model, stopwords, Rm3Config};
use lirlab::traversal::{generate_dataset, traverse_and_decode, DEFAULT_STEPS, EVAL_DEPTH};
use lirlab::{inner_product, DecoderConfig, Document, EncoderConfig, Lab, Query};
use serde_json::Value;
use tempfile::TempDir;

use common::*;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ndcg_oracle() -> Check {
    let expected = [1.000, 0.631, 0.500, 0.431, 0.387, 0.356];
    let grades = BTreeMap::from([("gold".to_string(), 1)]);
    let mut got = Vec::new();
    for (i, want) in expected.iter().enumerate() {
        let ranking: Vec<String> =
            (0..10).map(|j| if j == i { "gold".to_string() } else { format!("other{j}") }).collect();
        let v = ndcg_for_ranking(ranking.iter().map(String::as_str), Some(&grades), 10);
        ensure((v - want).abs() <= 5e-4, || format!("rank {}: {v:.4} vs {want}", i + 1))?;
        got.push(format!("{v:.3}"));
    }
    Ok(got.join("/"))
}

/// Dirichlet relevance model evaluated term by term, straight from the formula.
fn brute_force_rm(texts: &[&str], query: &str, mu: f64) -> BTreeMap<String, f64> {
    let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize_str(t)).collect();
    let total: usize = docs.iter().map(Vec::len).sum();
    let tf = |doc: &[String], w: &str| doc.iter().filter(|t| *t == w).count() as f64;
    let p_coll = |w: &str| docs.iter().map(|d| tf(d, w)).sum::<f64>() / total as f64;
    let p_doc = |doc: &[String], w: &str| (tf(doc, w) + mu * p_coll(w)) / (doc.len() as f64 + mu);
    let q = tokenize_str(query);
    let mut scores = BTreeMap::new();
    for w in docs.iter().flatten() {
        if q.contains(w) || stopwords::english().contains(w) || scores.contains_key(w) {
            continue;
        }
        let s: f64 = docs
            .iter()
            .map(|d| p_doc(d, w) * q.iter().filter(|t| p_coll(t) > 0.0).map(|t| p_doc(d, t)).product::<f64>())
            .sum();
        scores.insert(w.clone(), s);
    }
    scores
}

fn rm3_equivalence() -> Check {
    let texts = [
        "shopko stores in kennewick washington open daily",
        "kennewick washington river city tri cities",
        "shopko pharmacy hours and shopko optical",
        "the river walk in kennewick is popular",
        "retail chain shopko closed stores in washington",
    ];
    let query = "shopko kennewick";
    let docs: Vec<Document> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document { doc_id: format!("d{i}"), text: t.to_string(), title: None })
        .collect();
    let lab = Lab::build(docs, EncoderConfig::default(), DecoderConfig::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut terms = 0;
    for mu in [1.0, 2500.0, 1e6] {
        let cfg = Rm3Config { mu, ..Rm3Config::default() };
        let got: BTreeMap<String, f64> =
            relevance_model(&lab, &Query::new("q", query), &cfg).map_err(|e| e.to_string())?.into_iter().collect();
        let want = brute_force_rm(&texts, query, mu);
        ensure(got.keys().eq(want.keys()), || format!("mu={mu}: term sets differ"))?;
        for (t, s) in &got {
            let rel = (s - want[t]).abs() / want[t].abs();
            worst = worst.max(rel);
            ensure(rel <= 1e-9, || format!("mu={mu} term {t}: {s:e} vs {:e}", want[t]))?;
        }
        terms += got.len();
    }
    Ok(format!("{terms} term scores, max relative error {worst:.1e}"))
}

fn round_trip(fx: &DataSet) -> Check {
    let beam = round_trip_eval(&fx.queries, fx.lab.encoder(), fx.lab.decoder()).map_err(|e| e.to_string())?;
    let greedy_dec = fx.lab.decoder().with_config(DecoderConfig::greedy()).map_err(|e| e.to_string())?;
    let greedy = round_trip_eval(&fx.queries, fx.lab.encoder(), &greedy_dec).map_err(|e| e.to_string())?;
    let detail = format!(
        "F1 {:.3} vs greedy {:.3}, cosine {:.3} vs greedy {:.3}",
        beam.mean_f1, greedy.mean_f1, beam.mean_cosine, greedy.mean_cosine
    );
    ensure(beam.mean_f1 > greedy.mean_f1, || format!("F1 not above greedy: {detail}"))?;
    ensure(beam.mean_cosine > greedy.mean_cosine, || format!("cosine not above greedy: {detail}"))?;
    ensure(beam.mean_cosine >= 0.90, || format!("cosine below 0.90: {detail}"))?;
    Ok(detail)
}

fn paragraph_to_query(fx: &DataSet) -> Check {
    let lab = &fx.lab;
    let s = paragraph_to_query_eval(&fx.qrels, lab.docs(), lab.index(), lab.encoder(), lab.decoder(), &[1, 3, 5])
        .map_err(|e| e.to_string())?;
    let detail = format!("success@1/3/5 = {:.3}/{:.3}/{:.3}", s[&1], s[&3], s[&5]);
    ensure(s[&1] <= s[&3] && s[&3] <= s[&5], || format!("not nested: {detail}"))?;
    ensure(s[&5] >= 0.8, || format!("success@5 below 0.8: {detail}"))?;
    Ok(detail)
}

fn traversal_trend(fx: &DataSet) -> Check {
    let mut picked = Vec::new();
    for q in &fx.queries {
        let Some(gold) = fx.qrels.gold(&q.query_id) else { continue };
        let res = fx.lab.search_text(&q.text, EVAL_DEPTH).map_err(|e| e.to_string())?;
        let grades = fx.qrels.for_query(&q.query_id);
        if ndcg_for_ranking(res.doc_ids(), grades, EVAL_DEPTH) == 0.0 {
            picked.push((q, gold));
        }
        if picked.len() == 100 {
            break;
        }
    }
    ensure(picked.len() == 100, || format!("only {} zero-nDCG queries", picked.len()))?;
    let (mut first, mut last, mut reached) = (0.0, 0.0, 0usize);
    for (q, gold) in &picked {
        let steps = traverse_and_decode(&fx.lab, q, gold, DEFAULT_STEPS, &fx.qrels).map_err(|e| e.to_string())?;
        first += steps[0].ndcg;
        last += steps[steps.len() - 1].ndcg;
        reached += usize::from(steps.iter().any(|s| s.ndcg == 1.0));
    }
    let n = picked.len() as f64;
    let (first, last, frac) = (first / n, last / n, reached as f64 / n);
    let detail = format!("mean nDCG kappa=1 {first:.3}, kappa=k {last:.3}, reach 1.0 {frac:.2}");
    ensure(last - first >= 0.15, || format!("trend under 0.15: {detail}"))?;
    ensure(frac >= 0.5, || format!("reach fraction under 0.5: {detail}"))?;
    Ok(detail)
}

/// nDCG@10 with exponential gain, written out independently of the library.
fn reference_ndcg(ranking: &[&str], grades: &BTreeMap<String, u32>) -> f64 {
    let gain = |g: u32| 2f64.powi(g as i32) - 1.0;
    let dcg: f64 = ranking
        .iter()
        .take(10)
        .enumerate()
        .map(|(i, d)| gain(*grades.get(*d).unwrap_or(&0)) / ((i + 2) as f64).log2())
        .sum();
    let mut ideal: Vec<u32> = grades.values().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal.iter().take(10).enumerate().map(|(i, &g)| gain(g) / ((i + 2) as f64).log2()).sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

fn filter_soundness(sample: &DataSet) -> Check {
    let ds = generate_dataset(&sample.lab, &sample.queries, &sample.qrels, 20, 42).map_err(|e| e.to_string())?;
    ensure(!ds.records.is_empty(), || "no records generated".into())?;
    let lab = &sample.lab;
    for r in &ds.records {
        let grades = sample.qrels.for_query(&r.query_id).ok_or("record for unjudged query")?;
        let gold = lab.doc_embedding(sample.qrels.gold(&r.query_id).unwrap()).map_err(|e| e.to_string())?;
        let mut recomputed = [0.0; 4];
        for (slot, text) in [(0, &r.original_text), (1, &r.reformulation_text)] {
            let z = lab.encode(text).map_err(|e| e.to_string())?;
            let scores = lab.index().scores(&z).map_err(|e| e.to_string())?;
            let mut order: Vec<usize> = (0..scores.len()).collect();
            order.sort_by(|&a, &b| {
                scores[b].total_cmp(&scores[a]).then(lab.index().doc_ids()[a].cmp(&lab.index().doc_ids()[b]))
            });
            let ranking: Vec<&str> = order.iter().take(10).map(|&i| lab.index().doc_ids()[i].as_str()).collect();
            recomputed[slot] = reference_ndcg(&ranking, grades);
            recomputed[slot + 2] = inner_product(&z, &gold).map_err(|e| e.to_string())?;
        }
        let [before, after, ip_before, ip_after] = recomputed;
        let ok = after == 1.0 && after > before && ip_after > ip_before;
        ensure(ok, || format!("{} kappa={} fails the filter on recomputation", r.query_id, r.kappa))?;
        let stored = [r.ndcg_before, r.ndcg_after, r.ip_before, r.ip_after];
        ensure(stored.iter().zip(&recomputed).all(|(a, b)| (a - b).abs() <= 1e-12), || {
            format!("{} kappa={}: stored {stored:?} vs recomputed {recomputed:?}", r.query_id, r.kappa)
        })?;
    }
    Ok(format!("{} records re-verified from raw text", ds.records.len()))
}

fn run_ok(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = lirlab(args);
    if out.status.success() {
        Ok(out.stdout)
    } else {
        Err(format!("`lirlab {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn determinism() -> Check {
    let data = repo_root().join("data/sample");
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    let corpus = data.join("corpus.jsonl");
    let (i1, i2) = (tmp.path().join("a.bin"), tmp.path().join("b.bin"));
    run_ok(&["index", "--corpus", s(&corpus), "--out", s(&i1), "--dim", "256", "--seed", "1"])?;
    run_ok(&["index", "--corpus", s(&corpus), "--out", s(&i2), "--dim", "256", "--seed", "1"])?;
    let (a, b) = (fs::read(&i1).unwrap(), fs::read(&i2).unwrap());
    ensure(a == b, || "index files differ".into())?;
    let mut outputs = Vec::new();
    for name in ["r1.jsonl", "r2.jsonl"] {
        let out = tmp.path().join(name);
        run_ok(&[
            "gen-dataset",
            "--index",
            s(&i1),
            "--corpus",
            s(&corpus),
            "--queries",
            s(&data.join("queries.tsv")),
            "--qrels",
            s(&data.join("qrels.txt")),
            "--k",
            "20",
            "--seed",
            "42",
            "--out",
            s(&out),
        ])?;
        outputs.push(fs::read(out).unwrap());
    }
    ensure(outputs[0] == outputs[1], || "dataset JSONL differs between runs".into())?;
    ensure(!outputs[0].is_empty(), || "dataset is empty".into())?;
    Ok(format!("index {} bytes, dataset {} bytes, both identical", a.len(), outputs[0].len()))
}

fn best_of_k_protocol(report: &EvalReport) -> Check {
    let original = report.original.best_of_k[0].mean;
    let mut parts = Vec::new();
    for row in &report.methods {
        let means: Vec<f64> = row.best_of_k.iter().map(|b| b.mean).collect();
        ensure(means.windows(2).all(|w| w[0] <= w[1]), || format!("{} decreases in k: {means:?}", row.method))?;
        ensure(means[0] >= original, || format!("{} best@1 {:.4} below original {original:.4}", row.method, means[0]))?;
        parts.push(format!("{} {:.3}->{:.3}", row.method, means[0], means[means.len() - 1]));
    }
    ensure(report.methods.len() == 4, || "expected four methods".into())?;
    Ok(format!("original {original:.3}; {}", parts.join(", ")))
}

fn suggester_ordering(report: &EvalReport) -> Check {
    let best10 = |m: &str| {
        let row = report.methods.iter().find(|r| r.method == m).ok_or(format!("{m} missing"))?;
        let ki = report.ks.iter().position(|&k| k == 10).ok_or("k=10 missing")?;
        Ok::<f64, String>(row.best_of_k[ki].mean)
    };
    let (prf, sampling) = (best10("prf_traversal")?, best10("sampling_qd")?);
    let detail = format!("prf_traversal {prf:.4} vs sampling_qd {sampling:.4}");
    ensure(prf >= sampling, || detail.clone())?;
    Ok(detail)
}

fn text_metric_extremes() -> Check {
    let same = vec!["neblio coin price chart"; 10];
    let b_same = self_bleu(&same).map_err(|e| e.to_string())?;
    ensure((b_same - 100.0).abs() <= 0.01, || format!("identical: {b_same}"))?;
    let disjoint: Vec<String> = (0..10).map(|i| format!("alpha{i} beta{i} gamma{i} delta{i} eps{i}")).collect();
    let b_disjoint = self_bleu(&disjoint).map_err(|e| e.to_string())?;
    ensure(b_disjoint < 1.0, || format!("disjoint: {b_disjoint}"))?;
    let mut lm = NGramLm::new(3, 0.1).map_err(|e| e.to_string())?;
    lm.extend_vocabulary((0..49).map(|i| format!("tok{i}")));
    let v = lm.outcome_count() as f64;
    let ppl = lm.perplexity(&["tok1 tok2 tok3", "tok4 unseen tok4 tok4 tok9"]).map_err(|e| e.to_string())?;
    ensure((ppl - v).abs() <= 1e-6, || format!("uniform PPL {ppl} vs V {v}"))?;
    Ok(format!("self-BLEU identical {b_same:.2}, disjoint {b_disjoint:.2}; uniform PPL {ppl:.6} (V={v})"))
}

fn end_to_end() -> Check {
    let data = repo_root().join("data/sample");
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    let corpus = tmp.path().join("corpus.jsonl");
    let index = tmp.path().join("index.bin");
    let (queries, qrels) = (data.join("queries.tsv"), data.join("qrels.txt"));
    run_ok(&["ingest", "--corpus", s(&data.join("corpus.jsonl")), "--out", s(&corpus)])?;
    run_ok(&["index", "--corpus", s(&corpus), "--out", s(&index)])?;
    let lab = ["--index", s(&index), "--corpus", s(&corpus)];
    let ds = tmp.path().join("dataset/records.jsonl");
    run_ok(&[&["gen-dataset"][..], &lab, &["--queries", s(&queries), "--qrels", s(&qrels), "--out", s(&ds)]].concat())?;
    let query = fs::read_to_string(&queries).unwrap().lines().next().unwrap().split('\t').nth(1).unwrap().to_string();
    for method in ["rm3", "sampling", "prf", "plain"] {
        let out = run_ok(&[&["suggest"][..], &lab, &["--method", method, "--query", &query]].concat())?;
        let v: Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
        ensure(v["suggestions"].as_array().is_some_and(|a| !a.is_empty() && a.len() <= 10), || {
            format!("{method}: bad suggestion set")
        })?;
    }
    let report_path = tmp.path().join("report.json");
    run_ok(
        &[&["eval"][..], &lab, &["--queries", s(&queries), "--qrels", s(&qrels), "--out", s(&report_path)]].concat(),
    )?;
    let report: EvalReport =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).map_err(|e| e.to_string())?;
    report.validate()?;
    ensure(report.methods.len() == 4 && report.queries == 200, || "report shape".into())?;
    ensure(tmp.path().join("report.csv").exists(), || "CSV missing".into())?;
    let records = fs::read_to_string(&ds).unwrap().lines().count();
    Ok(format!("{records} dataset records, report over {} queries", report.queries))
}

struct Outcome {
    name: &'static str,
    passed: bool,
}

fn check(name: &'static str, budget: Option<Duration>, f: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let result = f();
    let took = start.elapsed();
    let over = budget.filter(|b| took > *b);
    let passed = result.is_ok() && over.is_none();
    let detail = match (&result, over) {
        (Err(e), _) => e.clone(),
        (Ok(d), Some(b)) => format!("{d}; exceeded {:.0?} budget", b),
        (Ok(d), None) => d.clone(),
    };
    println!("{} {name}: {detail} [{:.2}s]", if passed { "PASS" } else { "FAIL" }, took.as_secs_f64());
    Outcome { name, passed }
}

fn main() -> ExitCode {
    // `cargo test` forwards harness flags; only bare words act as name filters.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |name: &str| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()));
    let secs = |s| Some(Duration::from_secs(s));

    let mut outcomes = Vec::new();
    let mut run = |name, budget, f: &dyn Fn() -> Check| {
        if wanted(name) {
            outcomes.push(check(name, budget, f));
        }
    };
    run("ndcg_oracle", secs(1), &ndcg_oracle);
    run("rm3_equivalence", secs(1), &rm3_equivalence);
    run("self_bleu_and_perplexity_extremes", None, &text_metric_extremes);

    let fixture = std::cell::OnceCell::new();
    let fx = || fixture.get_or_init(|| load("fixture"));
    run("round_trip", secs(120), &|| round_trip(fx()));
    run("paragraph_to_query", secs(120), &|| paragraph_to_query(fx()));
    run("traversal_trend", secs(300), &|| traversal_trend(fx()));
    run("filter_soundness", secs(300), &|| filter_soundness(&load("sample")));
    run("determinism", None, &determinism);

    let report = std::cell::OnceCell::new();
    let fixture_report = || {
        report
            .get_or_init(|| {
                let opts = EvalOptions::default();
                evaluate(&fx().lab, &fx().queries, &fx().qrels, &opts).map(|r| r.0).map_err(|e| e.to_string())
            })
            .clone()
    };
    run("best_of_k_protocol", None, &|| best_of_k_protocol(&fixture_report()?));
    run("suggester_ordering", None, &|| suggester_ordering(&fixture_report()?));
    run("end_to_end_smoke", secs(600), &end_to_end);

    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    println!("\nacceptance: {} passed, {} failed", outcomes.len() - failed.len(), failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
