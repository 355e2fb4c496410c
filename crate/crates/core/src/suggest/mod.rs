//! Query suggesters sharing one contract: a query (and, for feedback methods,
//! its search results) in, at most ten distinct rewrites out.

mod plain;
mod prf;
mod rm3;
mod sampling;
pub mod stopwords;

pub use plain::{plain_suggest, PlainConfig};
pub use prf::{prf_traversal_suggest, PrfConfig};
pub use rm3::{relevance_model, rm3_suggest, Rm3Config};
pub use sampling::{ball_offsets, sampling_qd_suggest, SamplingConfig};

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Query;
use crate::embedding::inner_product;
use crate::error::{Error, Result};
use crate::lab::Lab;
use crate::metrics::ndcg_at_k;
use crate::traversal::EVAL_DEPTH;

pub const MAX_SUGGESTIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionMethod {
    Rm3,
    SamplingQd,
    PrfTraversal,
    Plain,
}

impl SuggestionMethod {
    pub const ALL: [SuggestionMethod; 4] =
        [SuggestionMethod::Rm3, SuggestionMethod::SamplingQd, SuggestionMethod::PrfTraversal, SuggestionMethod::Plain];

    pub fn as_str(self) -> &'static str {
        match self {
            SuggestionMethod::Rm3 => "rm3",
            SuggestionMethod::SamplingQd => "sampling_qd",
            SuggestionMethod::PrfTraversal => "prf_traversal",
            SuggestionMethod::Plain => "plain",
        }
    }
}

impl fmt::Display for SuggestionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuggestionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rm3" => Ok(SuggestionMethod::Rm3),
            "sampling" | "sampling_qd" => Ok(SuggestionMethod::SamplingQd),
            "prf" | "prf_traversal" => Ok(SuggestionMethod::PrfTraversal),
            "plain" => Ok(SuggestionMethod::Plain),
            other => Err(Error::InvalidConfig(format!("unknown suggestion method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ndcg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ip_with_gold: Option<f64>,
}

impl Suggestion {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into(), ndcg: None, ip_with_gold: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionSet {
    pub query_id: String,
    pub method: SuggestionMethod,
    pub suggestions: Vec<Suggestion>,
}

impl SuggestionSet {
    /// Drops repeated texts (first wins) and caps the list.
    pub fn new(query_id: &str, method: SuggestionMethod, texts: impl IntoIterator<Item = String>, cap: usize) -> Self {
        let mut seen = HashSet::new();
        let suggestions = texts
            .into_iter()
            .filter(|t| seen.insert(t.clone()))
            .take(cap.min(MAX_SUGGESTIONS))
            .map(Suggestion::new)
            .collect();
        Self { query_id: query_id.to_string(), method, suggestions }
    }

    pub fn texts(&self) -> Vec<&str> {
        self.suggestions.iter().map(|s| s.text.as_str()).collect()
    }

    /// Per-suggestion nDCG@10, 0 where missing.
    pub fn ndcgs(&self) -> Vec<f64> {
        self.suggestions.iter().map(|s| s.ndcg.unwrap_or(0.0)).collect()
    }

    /// Fills nDCG@10 and the inner product with the gold embedding.
    pub fn annotate(&mut self, lab: &Lab, grades: &BTreeMap<String, u32>, gold_doc_id: &str) -> Result<()> {
        let gold = lab.doc_embedding(gold_doc_id)?;
        for s in &mut self.suggestions {
            let z = lab.encode(&s.text)?;
            s.ndcg = Some(ndcg_at_k(&lab.search(&z, EVAL_DEPTH)?, Some(grades), EVAL_DEPTH));
            s.ip_with_gold = Some(inner_product(&z, &gold)?);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SuggestConfig {
    pub rm3: Rm3Config,
    pub sampling: SamplingConfig,
    pub prf: PrfConfig,
    pub plain: PlainConfig,
}

impl SuggestConfig {
    /// Same settings with every random stream reseeded.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut cfg = self.clone();
        cfg.sampling.seed = seed;
        cfg.plain.seed = seed;
        cfg
    }
}

/// Runs one suggester and caps the output at `n` (and never above ten).
pub fn suggest(
    lab: &Lab,
    method: SuggestionMethod,
    query: &Query,
    cfg: &SuggestConfig,
    n: usize,
) -> Result<SuggestionSet> {
    let mut set = match method {
        SuggestionMethod::Rm3 => rm3_suggest(lab, query, &cfg.rm3)?,
        SuggestionMethod::SamplingQd => sampling_qd_suggest(lab, query, &cfg.sampling)?,
        SuggestionMethod::PrfTraversal => prf_traversal_suggest(lab, query, &cfg.prf)?,
        SuggestionMethod::Plain => plain_suggest(lab, query, &cfg.plain)?,
    };
    set.suggestions.truncate(n.min(MAX_SUGGESTIONS));
    Ok(set)
}

pub(crate) fn require_tokens(query: &Query) -> Result<()> {
    if crate::embedding::tokenize(&query.text).is_empty() {
        return Err(Error::EmptyQuery);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names() {
        for m in SuggestionMethod::ALL {
            assert_eq!(m.as_str().parse::<SuggestionMethod>().unwrap(), m);
        }
        assert_eq!("prf".parse::<SuggestionMethod>().unwrap(), SuggestionMethod::PrfTraversal);
        assert!("mqr".parse::<SuggestionMethod>().is_err());
        assert_eq!(serde_json::to_string(&SuggestionMethod::SamplingQd).unwrap(), "\"sampling_qd\"");
    }

    #[test]
    fn set_dedupes_and_caps() {
        let texts = (0..30).map(|i| format!("q {}", i % 12));
        let set = SuggestionSet::new("q", SuggestionMethod::Plain, texts, 50);
        assert_eq!(set.suggestions.len(), 10);
        let unique: HashSet<_> = set.texts().into_iter().collect();
        assert_eq!(unique.len(), 10);
    }
}
