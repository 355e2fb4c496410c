//! Pseudo-relevance-feedback traversal: decode points part of the way from the
//! query embedding toward each top-ranked result.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{require_tokens, SuggestionMethod, SuggestionSet, MAX_SUGGESTIONS};
use crate::corpus::Query;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::lab::Lab;
use crate::traversal::interpolate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfConfig {
    pub fb_docs: usize,
    pub fractions: Vec<f64>,
}

impl Default for PrfConfig {
    fn default() -> Self {
        Self { fb_docs: 5, fractions: vec![0.3, 0.5, 0.7] }
    }
}

impl PrfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fb_docs < 1 {
            return Err(Error::InvalidConfig("fb_docs must be >= 1".into()));
        }
        if self.fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(Error::InvalidConfig("fractions must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Ranked by re-encoding similarity to the point each text was decoded from,
/// ties by text; a text decoded from several points keeps its best similarity.
pub fn prf_traversal_suggest(lab: &Lab, query: &Query, cfg: &PrfConfig) -> Result<SuggestionSet> {
    require_tokens(query)?;
    cfg.validate()?;
    let q = lab.encode(&query.text)?;
    let top = lab.search(&q, cfg.fb_docs)?;
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for doc_id in top.doc_ids() {
        let d = lab.doc_embedding(doc_id)?;
        for &f in &cfg.fractions {
            let Some(target) = Embedding::normalized_from_f64(&interpolate(&q, &d, f)) else { continue };
            let dec = lab.decoder().decode_greedy_beam(&target)?;
            let slot = best.entry(dec.text).or_insert(f64::NEG_INFINITY);
            *slot = slot.max(dec.reencode_similarity);
        }
    }
    let mut ranked: Vec<(String, f64)> = best.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let texts = ranked.into_iter().map(|(t, _)| t);
    Ok(SuggestionSet::new(&query.query_id, SuggestionMethod::PrfTraversal, texts, MAX_SUGGESTIONS))
}
