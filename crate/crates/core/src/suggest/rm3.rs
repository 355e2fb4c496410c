//! Relevance-model expansion terms from dense-retrieved feedback documents.
//!
//! `rm(w) = Σ_D P(w|D) · P(Q|D)` over the feedback set, with Dirichlet
//! smoothed document models `P(w|D) = (tf(w,D) + μ P(w|C)) / (|D| + μ)` and
//! `P(Q|D) = Π_i P(q_i|D)`. Each suggestion is the original query with one
//! expansion term appended.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{require_tokens, stopwords, SuggestionMethod, SuggestionSet};
use crate::corpus::Query;
use crate::embedding::tokenize_str;
use crate::error::{Error, Result};
use crate::lab::{CollectionStats, DocStats, Lab};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rm3Config {
    pub mu: f64,
    pub fb_docs: usize,
    pub fb_terms: usize,
    pub stopwords: BTreeSet<String>,
}

impl Default for Rm3Config {
    fn default() -> Self {
        Self {
            mu: 2500.0,
            fb_docs: 5,
            fb_terms: 10,
            stopwords: stopwords::ENGLISH.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Rm3Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidConfig("mu must be > 0".into()));
        }
        if self.fb_docs < 1 || self.fb_terms < 1 {
            return Err(Error::InvalidConfig("fb_docs and fb_terms must be >= 1".into()));
        }
        Ok(())
    }
}

fn p_dirichlet(doc: &DocStats, coll: &CollectionStats, term: &str, mu: f64) -> f64 {
    let tf = doc.tf.get(term).copied().unwrap_or(0) as f64;
    (tf + mu * coll.p_collection(term)) / (doc.len as f64 + mu)
}

/// Relevance-model score of every candidate term occurring in the feedback
/// documents. Query tokens unseen in the collection are left out of `P(Q|D)`.
pub fn term_scores(
    feedback: &[&DocStats],
    coll: &CollectionStats,
    query_tokens: &[String],
    mu: f64,
    excluded: &BTreeSet<String>,
) -> BTreeMap<String, f64> {
    let query_likelihood: Vec<f64> = feedback
        .iter()
        .map(|doc| {
            query_tokens
                .iter()
                .filter(|q| coll.cf.contains_key(q.as_str()))
                .map(|q| p_dirichlet(doc, coll, q, mu))
                .product()
        })
        .collect();
    let candidates: BTreeSet<&String> = feedback.iter().flat_map(|d| d.tf.keys()).collect();
    candidates
        .into_iter()
        .filter(|w| !excluded.contains(*w))
        .map(|w| {
            let score = feedback.iter().zip(&query_likelihood).map(|(d, ql)| p_dirichlet(d, coll, w, mu) * ql).sum();
            (w.clone(), score)
        })
        .collect()
}

/// Candidate terms for `query`, best first (ties by ascending term).
pub fn relevance_model(lab: &Lab, query: &Query, cfg: &Rm3Config) -> Result<Vec<(String, f64)>> {
    require_tokens(query)?;
    cfg.validate()?;
    let q_tokens = tokenize_str(&query.text);
    let top = lab.search_text(&query.text, cfg.fb_docs)?;
    let feedback: Vec<&DocStats> = top.doc_ids().map(|id| lab.doc_stats(id)).collect::<Result<_>>()?;
    let mut excluded = cfg.stopwords.clone();
    excluded.extend(q_tokens.iter().cloned());
    let mut ranked: Vec<(String, f64)> =
        term_scores(&feedback, lab.collection(), &q_tokens, cfg.mu, &excluded).into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}

pub fn rm3_suggest(lab: &Lab, query: &Query, cfg: &Rm3Config) -> Result<SuggestionSet> {
    let ranked = relevance_model(lab, query, cfg)?;
    let texts = ranked.into_iter().take(cfg.fb_terms).map(|(term, _)| format!("{} {term}", query.text));
    Ok(SuggestionSet::new(&query.query_id, SuggestionMethod::Rm3, texts, cfg.fb_terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::decoder::DecoderConfig;
    use crate::embedding::EncoderConfig;

    fn lab(texts: &[&str]) -> Lab {
        let docs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document { doc_id: format!("d{i}"), text: t.to_string(), title: None })
            .collect();
        Lab::build(docs, EncoderConfig::default(), DecoderConfig::default()).unwrap()
    }

    #[test]
    fn sole_query_term_leaves_nothing() {
        let lab = lab(&["kennewick"]);
        let set = rm3_suggest(&lab, &Query::new("q", "kennewick"), &Rm3Config::default()).unwrap();
        assert!(set.suggestions.is_empty());
    }

    #[test]
    fn suggestions_append_one_term() {
        let lab = lab(&[
            "shopko store in kennewick address and hours",
            "shopko pharmacy kennewick phone",
            "the weather in seattle",
        ]);
        let q = Query::new("q", "shopko kennewick address");
        let set = rm3_suggest(&lab, &q, &Rm3Config::default()).unwrap();
        assert!(!set.suggestions.is_empty());
        for s in &set.suggestions {
            let rest = s.text.strip_prefix("shopko kennewick address ").unwrap();
            assert_eq!(tokenize_str(rest).len(), 1);
            assert!(!stopwords::english().contains(rest));
        }
    }

    #[test]
    fn empty_query_errors() {
        let lab = lab(&["a b"]);
        assert!(matches!(rm3_suggest(&lab, &Query::new("q", "??"), &Rm3Config::default()), Err(Error::EmptyQuery)));
    }
}
