//! Sentence BLEU-4 with uniform weights and epsilon smoothing for zero
//! n-gram matches (`method1`, epsilon 0.1). Like NLTK, a hypothesis without a
//! single matching unigram scores 0.

use std::collections::HashMap;

use crate::embedding::tokenize_str;
use crate::error::{Error, Result};

const MAX_ORDER: usize = 4;
const EPSILON: f64 = 0.1;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_default() += 1;
        }
    }
    counts
}

/// BLEU-4 in [0, 1] of `hypothesis` against `references` (token lists).
pub fn sentence_bleu(references: &[Vec<String>], hypothesis: &[String]) -> f64 {
    let mut numerators = [0usize; MAX_ORDER];
    let mut denominators = [0usize; MAX_ORDER];
    for n in 1..=MAX_ORDER {
        let hyp = ngram_counts(hypothesis, n);
        let mut max_ref: HashMap<&[String], usize> = HashMap::new();
        for r in references {
            for (g, c) in ngram_counts(r, n) {
                let slot = max_ref.entry(g).or_default();
                *slot = (*slot).max(c);
            }
        }
        numerators[n - 1] = hyp.iter().map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0))).sum();
        denominators[n - 1] = hyp.values().sum::<usize>().max(1);
    }
    if numerators[0] == 0 {
        return 0.0;
    }
    let hyp_len = hypothesis.len();
    let ref_len = references.iter().map(Vec::len).min_by_key(|&r| (r.abs_diff(hyp_len), r)).unwrap_or(0);
    let bp = if hyp_len > ref_len {
        1.0
    } else if hyp_len == 0 {
        0.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    let log_sum: f64 = numerators
        .iter()
        .zip(&denominators)
        .map(|(&num, &den)| {
            let p = if num == 0 { EPSILON / den as f64 } else { num as f64 / den as f64 };
            p.ln() / MAX_ORDER as f64
        })
        .sum();
    bp * log_sum.exp()
}

/// Mean BLEU (x100) of each suggestion against all the others.
pub fn self_bleu<S: AsRef<str>>(suggestions: &[S]) -> Result<f64> {
    if suggestions.len() < 2 {
        return Err(Error::TooFewSuggestions(suggestions.len()));
    }
    let toks: Vec<Vec<String>> = suggestions.iter().map(|s| tokenize_str(s.as_ref())).collect();
    let total: f64 = (0..toks.len())
        .map(|i| {
            let refs: Vec<Vec<String>> =
                toks.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, t)| t.clone()).collect();
            sentence_bleu(&refs, &toks[i])
        })
        .sum();
    Ok(100.0 * total / toks.len() as f64)
}
