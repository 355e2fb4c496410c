//! Feedback-free rewrites: stochastic decodings of the query's own embedding.

use serde::{Deserialize, Serialize};

use super::{require_tokens, SuggestionMethod, SuggestionSet, MAX_SUGGESTIONS};
use crate::corpus::Query;
use crate::decoder::DecoderConfig;
use crate::error::Result;
use crate::lab::Lab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlainConfig {
    pub temperature: f64,
    pub num_samples: usize,
    pub seed: u64,
}

impl Default for PlainConfig {
    fn default() -> Self {
        Self { temperature: 0.05, num_samples: MAX_SUGGESTIONS, seed: 0 }
    }
}

pub fn plain_suggest(lab: &Lab, query: &Query, cfg: &PlainConfig) -> Result<SuggestionSet> {
    require_tokens(query)?;
    let z = lab.encode(&query.text)?;
    let dec_cfg = DecoderConfig {
        sample_temperature: cfg.temperature,
        num_samples: cfg.num_samples,
        seed: cfg.seed,
        ..*lab.decoder().config()
    };
    let samples = lab.decoder().with_config(dec_cfg)?.decode_samples(&z)?;
    Ok(SuggestionSet::new(
        &query.query_id,
        SuggestionMethod::Plain,
        samples.into_iter().map(|d| d.text),
        cfg.num_samples,
    ))
}
