//! Regenerates the shipped synthetic datasets and records the pilot
//! measurements that the acceptance floors are frozen from.
//!
//! cargo run --release -p lirlab-core --example pilot -- <repo root>

use std::path::PathBuf;
use std::time::Instant;

use lirlab::decoder::{paragraph_to_query_eval, round_trip_eval, DecoderConfig};
use lirlab::eval::{evaluate, EvalOptions};
use lirlab::synthetic::{generate, SyntheticSpec};
use lirlab::traversal::{generate_dataset, traverse_and_decode, DEFAULT_STEPS, EVAL_DEPTH};
use lirlab::{EncoderConfig, Lab};
use serde_json::json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let fixture = generate(&SyntheticSpec::fixture())?;
    let sample = generate(&SyntheticSpec::sample())?;
    fixture.write_to(&root.join("data/fixture"))?;
    sample.write_to(&root.join("data/sample"))?;

    let t = Instant::now();
    let lab = Lab::build(fixture.docs.clone(), EncoderConfig::default(), DecoderConfig::default())?;
    let rt = round_trip_eval(&fixture.queries, lab.encoder(), lab.decoder())?;
    let greedy = lab.decoder().with_config(DecoderConfig::greedy())?;
    let rt_greedy = round_trip_eval(&fixture.queries, lab.encoder(), &greedy)?;
    let p2q =
        paragraph_to_query_eval(&fixture.qrels, lab.docs(), lab.index(), lab.encoder(), lab.decoder(), &[1, 3, 5])?;
    eprintln!("round trip {rt:?} greedy {rt_greedy:?} p2q {p2q:?} ({:?})", t.elapsed());

    let t = Instant::now();
    let mut zero = Vec::new();
    for q in &fixture.queries {
        let gold = fixture.qrels.gold(&q.query_id).unwrap();
        let res = lab.search_text(&q.text, EVAL_DEPTH)?;
        if res.position(gold).is_none() {
            zero.push(q.clone());
        }
    }
    let n_zero = zero.len();
    zero.truncate(100);
    let mut first = 0.0;
    let mut last = 0.0;
    let mut reached = 0;
    for q in &zero {
        let gold = fixture.qrels.gold(&q.query_id).unwrap();
        let steps = traverse_and_decode(&lab, q, gold, DEFAULT_STEPS, &fixture.qrels)?;
        first += steps[0].ndcg;
        last += steps.last().unwrap().ndcg;
        if steps.iter().any(|s| s.ndcg == 1.0) {
            reached += 1;
        }
    }
    let n = zero.len() as f64;
    eprintln!(
        "zero-ndcg queries {n_zero}; traversal first {:.3} last {:.3} reached {:.3} ({:?})",
        first / n,
        last / n,
        reached as f64 / n,
        t.elapsed()
    );

    let t = Instant::now();
    let sample_lab = Lab::build(sample.docs.clone(), EncoderConfig::default(), DecoderConfig::default())?;
    let ds = generate_dataset(&sample_lab, &sample.queries, &sample.qrels, DEFAULT_STEPS, 42)?;
    eprintln!("dataset {:?} ({:?})", ds.stats, t.elapsed());

    let t = Instant::now();
    let (report, _) = evaluate(&lab, &fixture.queries, &fixture.qrels, &EvalOptions::default())?;
    eprintln!("{}({:?})", report.to_table(), t.elapsed());

    let pilot = json!({
        "fixture": SyntheticSpec::fixture(),
        "round_trip": rt,
        "round_trip_greedy": rt_greedy,
        "paragraph_to_query": p2q,
        "zero_ndcg_queries": n_zero,
        "traversal": {
            "queries": zero.len(),
            "steps": DEFAULT_STEPS,
            "mean_ndcg_first_step": first / n,
            "mean_ndcg_last_step": last / n,
            "fraction_reaching_ndcg_1": reached as f64 / n,
        },
        "sample_dataset": ds.stats,
        "eval": report,
    });
    std::fs::create_dir_all(root.join("data/pilot"))?;
    std::fs::write(root.join("data/pilot/pilot.json"), serde_json::to_string_pretty(&pilot)? + "\n")?;
    Ok(())
}
