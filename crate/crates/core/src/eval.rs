//! Suggestion evaluation over a judged query set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Qrels, Query};
use crate::error::{Error, Result};
use crate::lab::Lab;
use crate::metrics::{best_of_k, bootstrap_mean, self_bleu, EvalReport, MethodRow, NGramLm, BEST_OF_KS};
use crate::suggest::{suggest, SuggestConfig, SuggestionMethod, SuggestionSet, MAX_SUGGESTIONS};
use crate::traversal::{grades_or_gold, query_seed, EVAL_DEPTH};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub methods: Vec<SuggestionMethod>,
    pub suggest: SuggestConfig,
    pub ks: Vec<usize>,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            methods: SuggestionMethod::ALL.to_vec(),
            suggest: SuggestConfig::default(),
            ks: BEST_OF_KS.to_vec(),
            resamples: BOOTSTRAP_RESAMPLES,
            seed: 0,
        }
    }
}

/// Everything computed for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEval {
    pub query_id: String,
    pub gold_doc_id: String,
    pub original_ndcg: f64,
    pub sets: Vec<SuggestionSet>,
}

fn evaluate_query(lab: &Lab, query: &Query, qrels: &Qrels, gold: &str, opts: &EvalOptions) -> Result<QueryEval> {
    let grades = grades_or_gold(qrels, &query.query_id, gold);
    let original = lab.search_text(&query.text, EVAL_DEPTH)?;
    let original_ndcg = crate::metrics::ndcg_at_k(&original, Some(&grades), EVAL_DEPTH);
    let cfg = opts.suggest.reseeded(query_seed(opts.seed, &query.query_id));
    let sets = opts
        .methods
        .iter()
        .map(|&m| {
            let mut set = suggest(lab, m, query, &cfg, MAX_SUGGESTIONS)?;
            set.annotate(lab, &grades, gold)?;
            Ok(set)
        })
        .collect::<Result<_>>()?;
    Ok(QueryEval { query_id: query.query_id.clone(), gold_doc_id: gold.to_string(), original_ndcg, sets })
}

/// Per-query suggestions with metrics, for every judged query (sorted by id).
pub fn evaluate_queries(lab: &Lab, queries: &[Query], qrels: &Qrels, opts: &EvalOptions) -> Result<Vec<QueryEval>> {
    let mut judged: Vec<(&Query, &str)> =
        queries.iter().filter_map(|q| qrels.gold(&q.query_id).map(|g| (q, g))).collect();
    judged.sort_by(|a, b| a.0.query_id.cmp(&b.0.query_id));
    if judged.is_empty() {
        return Err(Error::EmptyInput);
    }
    judged.par_iter().map(|(q, g)| evaluate_query(lab, q, qrels, g, opts)).collect()
}

/// Aggregates per-query results into the method x best-of-k report.
pub fn build_report(evals: &[QueryEval], opts: &EvalOptions, lm: &NGramLm) -> Result<EvalReport> {
    if evals.is_empty() {
        return Err(Error::EmptyInput);
    }
    let originals: Vec<f64> = evals.iter().map(|e| e.original_ndcg).collect();
    let original_stats = bootstrap_mean(&originals, opts.resamples, opts.seed);
    let original = MethodRow {
        method: "original".into(),
        best_of_k: vec![original_stats; opts.ks.len()],
        self_bleu: None,
        perplexity: None,
        mean_suggestions: 0.0,
    };
    let mut methods = Vec::new();
    for (mi, &method) in opts.methods.iter().enumerate() {
        let per_query: Vec<Vec<f64>> =
            evals.iter().map(|e| best_of_k(&e.sets[mi].ndcgs(), e.original_ndcg, &opts.ks)).collect();
        let best = (0..opts.ks.len())
            .map(|ki| {
                let column: Vec<f64> = per_query.iter().map(|v| v[ki]).collect();
                bootstrap_mean(&column, opts.resamples, opts.seed)
            })
            .collect();
        let bleus: Vec<f64> = evals.iter().filter_map(|e| self_bleu(&e.sets[mi].texts()).ok()).collect();
        let texts: Vec<&str> = evals.iter().flat_map(|e| e.sets[mi].texts()).collect();
        let count: usize = evals.iter().map(|e| e.sets[mi].suggestions.len()).sum();
        methods.push(MethodRow {
            method: method.as_str().into(),
            best_of_k: best,
            self_bleu: (!bleus.is_empty()).then(|| bleus.iter().sum::<f64>() / bleus.len() as f64),
            perplexity: if texts.is_empty() { None } else { Some(lm.perplexity(&texts)?) },
            mean_suggestions: count as f64 / evals.len() as f64,
        });
    }
    Ok(EvalReport {
        queries: evals.len(),
        ks: opts.ks.clone(),
        bootstrap_resamples: opts.resamples,
        seed: opts.seed,
        original,
        methods,
    })
}

/// Runs every suggester on every judged query and builds the report. The
/// fluency model is trained on the corpus passages.
pub fn evaluate(
    lab: &Lab,
    queries: &[Query],
    qrels: &Qrels,
    opts: &EvalOptions,
) -> Result<(EvalReport, Vec<QueryEval>)> {
    let evals = evaluate_queries(lab, queries, qrels, opts)?;
    let lm = NGramLm::train_default(lab.docs().iter().map(|d| d.text.as_str()));
    Ok((build_report(&evals, opts, &lm)?, evals))
}
