//! Evaluation measures and report assembly.

mod bleu;
mod lm;
mod ndcg;
mod report;
mod suggestion;

pub use bleu::{self_bleu, sentence_bleu};
pub use lm::NGramLm;
pub use ndcg::{dcg, ndcg_at_k, ndcg_for_ranking};
pub use report::{CsvRow, EvalReport, MethodRow};
pub use suggestion::{best_of_k, bootstrap_mean, BootstrapStats, BEST_OF_KS};

use std::collections::HashMap;

use crate::embedding::Token;

/// SQuAD-style F1 over token multisets.
pub fn bag_f1(reference: &[Token], candidate: &[Token]) -> f64 {
    if reference.is_empty() && candidate.is_empty() {
        return 1.0;
    }
    if reference.is_empty() || candidate.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&Token, i64> = HashMap::new();
    for t in reference {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in candidate {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / candidate.len() as f64;
    let recall = overlap as f64 / reference.len() as f64;
    2.0 * precision * recall / (precision + recall)
}
