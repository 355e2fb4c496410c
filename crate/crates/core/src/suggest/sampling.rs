//! Decodes points drawn uniformly from an epsilon-ball around the query embedding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{require_tokens, SuggestionMethod, SuggestionSet};
use crate::corpus::Query;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::lab::Lab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub epsilon: f64,
    pub num_samples: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { epsilon: 0.05, num_samples: 10, seed: 0 }
    }
}

/// `num_samples` offsets uniform in the ball of radius epsilon: a Gaussian
/// direction scaled by `epsilon * u^(1/dim)`, `u` uniform in (0, 1].
pub fn ball_offsets(dim: usize, cfg: &SamplingConfig) -> Result<Vec<Vec<f64>>> {
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(Error::InvalidConfig("epsilon must be > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.num_samples);
    while out.len() < cfg.num_samples {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let u: f64 = 1.0 - rng.random::<f64>();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let radius = cfg.epsilon * u.powf(1.0 / dim as f64);
        out.push(dir.into_iter().map(|x| x / norm * radius).collect());
    }
    Ok(out)
}

pub fn sampling_qd_suggest(lab: &Lab, query: &Query, cfg: &SamplingConfig) -> Result<SuggestionSet> {
    require_tokens(query)?;
    let q = lab.encode(&query.text)?;
    let base = q.to_f64();
    let mut texts = Vec::with_capacity(cfg.num_samples);
    for offset in ball_offsets(q.dim(), cfg)? {
        let point: Vec<f64> = base.iter().zip(&offset).map(|(a, b)| a + b).collect();
        let Some(z) = Embedding::normalized_from_f64(&point) else { continue };
        texts.push(lab.decoder().decode_greedy_beam(&z)?.text);
    }
    Ok(SuggestionSet::new(&query.query_id, SuggestionMethod::SamplingQd, texts, cfg.num_samples))
}
