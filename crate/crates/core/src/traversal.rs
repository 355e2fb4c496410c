//! Walking the latent line from a query embedding to its gold paragraph,
//! decoding a reformulation at every step, and turning successful steps into
//! a reformulation dataset.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Qrels, Query};
use crate::decoder::{BeamDecoder, Decoding, QueryDecoder};
use crate::embedding::{inner_product, stable_hash, Embedding};
use crate::error::{Error, Result};
use crate::lab::Lab;
use crate::metrics::ndcg_at_k;

/// Retrieval depth used for every nDCG in this module.
pub const EVAL_DEPTH: usize = 10;
/// Step count used for dataset generation.
pub const DEFAULT_STEPS: usize = 20;
/// Feedback documents whose texts form the training-view context.
pub const CONTEXT_DOCS: usize = 5;

const QUERY_SEED_SALT: u64 = 0x5be0_cd19_137e_2179;

#[derive(Debug, Clone, PartialEq)]
pub struct TraversalPath {
    pub q: Embedding,
    pub d: Embedding,
    pub k: usize,
    /// `k + 1` unit vectors, `points[κ] ∝ q + (κ/k)(d − q)`.
    pub points: Vec<Embedding>,
}

impl TraversalPath {
    /// Pre-normalization point `q + (κ/k)(d − q)`.
    pub fn raw_point(&self, kappa: usize) -> Vec<f64> {
        interpolate(&self.q, &self.d, kappa as f64 / self.k as f64)
    }
}

/// `q + t (d − q)` in f64.
pub fn interpolate(q: &Embedding, d: &Embedding, t: f64) -> Vec<f64> {
    q.as_slice().iter().zip(d.as_slice()).map(|(&a, &b)| f64::from(a) + t * (f64::from(b) - f64::from(a))).collect()
}

pub fn make_path(q: &Embedding, d: &Embedding, k: usize) -> Result<TraversalPath> {
    if q.dim() != d.dim() {
        return Err(Error::DimMismatch { expected: q.dim(), actual: d.dim() });
    }
    if k < 1 {
        return Err(Error::InvalidStepCount(k));
    }
    let points = (0..=k)
        .map(|kappa| {
            Embedding::normalized_from_f64(&interpolate(q, d, kappa as f64 / k as f64))
                .ok_or(Error::DegeneratePoint(kappa))
        })
        .collect::<Result<_>>()?;
    Ok(TraversalPath { q: q.clone(), d: d.clone(), k, points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraversalStep {
    pub kappa: usize,
    pub decoding: Decoding,
    pub ndcg: f64,
    pub ip_with_gold: f64,
    /// 1-based rank of the gold document within the top 10.
    pub gold_rank: Option<usize>,
}

/// Decodes every step κ = 1..k and scores the decoded query at depth 10.
pub fn traverse_with_grades(
    lab: &Lab,
    decoder: &dyn QueryDecoder,
    query_text: &str,
    gold_doc_id: &str,
    k: usize,
    grades: &BTreeMap<String, u32>,
) -> Result<(TraversalPath, Vec<TraversalStep>)> {
    let gold = lab.doc_embedding(gold_doc_id)?;
    let path = make_path(&lab.encode(query_text)?, &gold, k)?;
    let steps = path.points[1..]
        .par_iter()
        .enumerate()
        .map(|(i, point)| {
            let decoding = decoder.decode(point)?;
            let reencoded = lab.encode(&decoding.text)?;
            let result = lab.search(&reencoded, EVAL_DEPTH)?;
            Ok(TraversalStep {
                kappa: i + 1,
                ndcg: ndcg_at_k(&result, Some(grades), EVAL_DEPTH),
                ip_with_gold: inner_product(&reencoded, &gold)?,
                gold_rank: result.position(gold_doc_id),
                decoding,
            })
        })
        .collect::<Result<_>>()?;
    Ok((path, steps))
}

/// Judgements for `query_id`, or the gold alone at grade 1 when unjudged.
pub fn grades_or_gold(qrels: &Qrels, query_id: &str, gold_doc_id: &str) -> BTreeMap<String, u32> {
    match qrels.for_query(query_id) {
        Some(g) if g.values().any(|&v| v > 0) => g.clone(),
        _ => BTreeMap::from([(gold_doc_id.to_string(), 1)]),
    }
}

pub fn traverse_and_decode(
    lab: &Lab,
    query: &Query,
    gold_doc_id: &str,
    k: usize,
    qrels: &Qrels,
) -> Result<Vec<TraversalStep>> {
    let grades = grades_or_gold(qrels, &query.query_id, gold_doc_id);
    Ok(traverse_with_grades(lab, lab.decoder(), &query.text, gold_doc_id, k, &grades)?.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReformulationRecord {
    pub query_id: String,
    pub original_text: String,
    pub reformulation_text: String,
    pub kappa: usize,
    pub ndcg_before: f64,
    pub ndcg_after: f64,
    pub ip_before: f64,
    pub ip_after: f64,
}

impl ReformulationRecord {
    pub fn passes_filter(&self) -> bool {
        passes_filter(self.ndcg_before, self.ndcg_after, self.ip_before, self.ip_after)
    }
}

/// Top-ranked gold, strictly better nDCG, strictly closer to the gold embedding.
pub fn passes_filter(ndcg_before: f64, ndcg_after: f64, ip_before: f64, ip_after: f64) -> bool {
    ndcg_after == 1.0 && ndcg_after > ndcg_before && ip_after > ip_before
}

/// Input/target pair for training a feedback-conditioned suggester elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub query: String,
    pub context: Vec<String>,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginalEval {
    pub query_id: String,
    pub gold_doc_id: String,
    pub ndcg: f64,
    pub ip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub k: usize,
    pub seed: u64,
    pub queries: usize,
    pub missing_gold: usize,
    pub evaluated: usize,
    pub with_success: usize,
    pub success_fraction: f64,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<ReformulationRecord>,
    pub training: Vec<TrainingExample>,
    pub originals: Vec<OriginalEval>,
    pub missing_gold: Vec<String>,
    pub stats: DatasetStats,
}

/// Per-query seed, independent of processing order.
pub fn query_seed(global_seed: u64, query_id: &str) -> u64 {
    global_seed ^ stable_hash(query_id.as_bytes(), 0, QUERY_SEED_SALT)
}

fn decode_step(decoder: &BeamDecoder, point: &Embedding) -> Result<Decoding> {
    if decoder.config().sample_temperature > 0.0 {
        let mut samples = decoder.decode_samples(point)?;
        return Ok(samples.swap_remove(0));
    }
    decoder.decode_greedy_beam(point)
}

struct QueryOutcome {
    original: OriginalEval,
    records: Vec<ReformulationRecord>,
    context: Vec<String>,
}

fn generate_for_query(
    lab: &Lab,
    query: &Query,
    gold_id: &str,
    qrels: &Qrels,
    k: usize,
    seed: u64,
) -> Result<QueryOutcome> {
    let sampling = lab.decoder().config().sample_temperature > 0.0;
    let local;
    let decoder = if sampling {
        let cfg = crate::decoder::DecoderConfig { seed: query_seed(seed, &query.query_id), ..*lab.decoder().config() };
        local = lab.decoder().with_config(cfg)?;
        &local
    } else {
        lab.decoder()
    };
    let grades = grades_or_gold(qrels, &query.query_id, gold_id);
    let gold = lab.doc_embedding(gold_id)?;
    let q = lab.encode(&query.text)?;
    let before = lab.search(&q, EVAL_DEPTH)?;
    let ndcg_before = ndcg_at_k(&before, Some(&grades), EVAL_DEPTH);
    let ip_before = inner_product(&q, &gold)?;
    let context = before
        .entries
        .iter()
        .take(CONTEXT_DOCS)
        .map(|e| lab.doc(&e.doc_id).map(|d| d.text.clone()))
        .collect::<Result<_>>()?;

    let path = make_path(&q, &gold, k)?;
    let mut records = Vec::new();
    for (kappa, point) in path.points.iter().enumerate().skip(1) {
        let decoding = decode_step(decoder, point)?;
        let reencoded = lab.encode(&decoding.text)?;
        let ndcg_after = ndcg_at_k(&lab.search(&reencoded, EVAL_DEPTH)?, Some(&grades), EVAL_DEPTH);
        let ip_after = inner_product(&reencoded, &gold)?;
        if passes_filter(ndcg_before, ndcg_after, ip_before, ip_after) {
            records.push(ReformulationRecord {
                query_id: query.query_id.clone(),
                original_text: query.text.clone(),
                reformulation_text: decoding.text,
                kappa,
                ndcg_before,
                ndcg_after,
                ip_before,
                ip_after,
            });
        }
    }
    let original = OriginalEval {
        query_id: query.query_id.clone(),
        gold_doc_id: gold_id.to_string(),
        ndcg: ndcg_before,
        ip: ip_before,
    };
    Ok(QueryOutcome { original, records, context })
}

/// Traverses every judged query and keeps the reformulations passing the
/// success filter. Queries without a gold are skipped and counted.
pub fn generate_dataset(lab: &Lab, queries: &[Query], qrels: &Qrels, k: usize, seed: u64) -> Result<Dataset> {
    if k < 1 {
        return Err(Error::InvalidStepCount(k));
    }
    let mut ordered: Vec<&Query> = queries.iter().collect();
    ordered.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    let (with_gold, missing): (Vec<_>, Vec<_>) = ordered.into_iter().partition(|q| qrels.gold(&q.query_id).is_some());
    let outcomes: Vec<QueryOutcome> = with_gold
        .par_iter()
        .map(|q| {
            let gold = qrels.gold(&q.query_id).expect("partitioned on gold");
            generate_for_query(lab, q, gold, qrels, k, seed)
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut training = Vec::new();
    let mut originals = Vec::new();
    let mut with_success = 0;
    for outcome in outcomes {
        if !outcome.records.is_empty() {
            with_success += 1;
        }
        for r in &outcome.records {
            training.push(TrainingExample {
                query: r.original_text.clone(),
                context: outcome.context.clone(),
                target: r.reformulation_text.clone(),
            });
        }
        records.extend(outcome.records);
        originals.push(outcome.original);
    }
    let evaluated = originals.len();
    let stats = DatasetStats {
        k,
        seed,
        queries: queries.len(),
        missing_gold: missing.len(),
        evaluated,
        with_success,
        success_fraction: if evaluated == 0 { 0.0 } else { with_success as f64 / evaluated as f64 },
        records: records.len(),
    };
    Ok(Dataset {
        records,
        training,
        originals,
        missing_gold: missing.into_iter().map(|q| q.query_id.clone()).collect(),
        stats,
    })
}

/// One JSON object per line.
pub fn write_jsonl<T: Serialize>(mut out: impl Write, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// 11 bins: [0,0.1), …, [0.9,1.0), [1,1].
pub fn ndcg_histogram(values: impl IntoIterator<Item = f64>) -> Histogram {
    let mut counts = vec![0u64; 11];
    for v in values {
        let bin = if v >= 1.0 { 10 } else { ((v * 10.0).floor().max(0.0) as usize).min(9) };
        counts[bin] += 1;
    }
    let mut edges: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    edges.push(1.0);
    Histogram { edges, counts }
}

/// 20 equal bins over [-1, 1].
pub fn ip_histogram(values: impl IntoIterator<Item = f64>) -> Histogram {
    let mut counts = vec![0u64; 20];
    for v in values {
        let bin = (((v + 1.0) * 10.0).floor().max(0.0) as usize).min(19);
        counts[bin] += 1;
    }
    Histogram { edges: (0..=20).map(|i| -1.0 + i as f64 / 10.0).collect(), counts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHistograms {
    pub ndcg_before: Histogram,
    pub ndcg_best_after: Histogram,
    pub ip_before: Histogram,
    pub ip_best_after: Histogram,
}

/// Original queries vs. each query's best record (highest nDCG, then inner product).
pub fn dataset_histograms(records: &[ReformulationRecord], originals: &[OriginalEval]) -> Result<DatasetHistograms> {
    if originals.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut best: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for r in records {
        let slot = best.entry(&r.query_id).or_insert((r.ndcg_after, r.ip_after));
        if (r.ndcg_after, r.ip_after) > *slot {
            *slot = (r.ndcg_after, r.ip_after);
        }
    }
    Ok(DatasetHistograms {
        ndcg_before: ndcg_histogram(originals.iter().map(|o| o.ndcg)),
        ndcg_best_after: ndcg_histogram(best.values().map(|b| b.0)),
        ip_before: ip_histogram(originals.iter().map(|o| o.ip)),
        ip_best_after: ip_histogram(best.values().map(|b| b.1)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(v: &[f64]) -> Embedding {
        Embedding::normalized_from_f64(v).unwrap()
    }

    #[test]
    fn endpoints_and_orthogonal_midpoint() {
        let q = unit(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let d = unit(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let path = make_path(&q, &d, 2).unwrap();
        assert_eq!(path.points.len(), 3);
        assert_eq!(path.points[0], q);
        assert_eq!(path.points[2], d);
        let h = std::f32::consts::FRAC_1_SQRT_2;
        assert!((path.points[1].as_slice()[0] - h).abs() < 1e-7);
        assert!((path.points[1].as_slice()[1] - h).abs() < 1e-7);
    }

    #[test]
    fn path_errors() {
        let q = unit(&[1.0; 8]);
        assert!(matches!(make_path(&q, &q, 0), Err(Error::InvalidStepCount(0))));
        assert!(matches!(make_path(&q, &unit(&[1.0; 9]), 2), Err(Error::DimMismatch { .. })));
        assert!(matches!(make_path(&q, &q.neg(), 2), Err(Error::DegeneratePoint(1))));
    }

    #[test]
    fn filter_conditions() {
        assert!(passes_filter(0.0, 1.0, 0.2, 0.3));
        assert!(!passes_filter(1.0, 1.0, 0.2, 0.3));
        assert!(!passes_filter(0.0, 0.63, 0.2, 0.3));
        assert!(!passes_filter(0.0, 1.0, 0.3, 0.3));
    }

    #[test]
    fn histogram_bins() {
        let h = ndcg_histogram([0.0, 0.0, 0.0]);
        assert_eq!(h.counts[0], 3);
        let h = ndcg_histogram([1.0, 0.95, 0.1]);
        assert_eq!((h.counts[10], h.counts[9], h.counts[1]), (1, 1, 1));
        let h = ip_histogram([-1.0, 1.0, 0.0, -0.05]);
        assert_eq!((h.counts[0], h.counts[19], h.counts[10], h.counts[9]), (1, 1, 1, 1));
        assert!(matches!(dataset_histograms(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn query_seed_is_order_free() {
        assert_eq!(query_seed(42, "q1"), query_seed(42, "q1"));
        assert_ne!(query_seed(42, "q1"), query_seed(42, "q2"));
    }
}
