use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Suggestion-list cutoffs reported per method.
pub const BEST_OF_KS: [usize; 4] = [1, 3, 5, 10];

/// Max nDCG over the original query and the first k suggestions, per k.
pub fn best_of_k(suggestion_ndcgs: &[f64], original_ndcg: f64, ks: &[usize]) -> Vec<f64> {
    ks.iter().map(|&k| suggestion_ndcgs.iter().take(k).fold(original_ndcg, |m, &v| m.max(v))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapStats {
    pub mean: f64,
    pub std: f64,
    pub p2_5: f64,
    pub p97_5: f64,
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Mean of `values` with a seeded bootstrap over items: std (ddof 1) of the
/// resampled means plus their 2.5/97.5 percentiles (linear interpolation).
pub fn bootstrap_mean(values: &[f64], resamples: usize, seed: u64) -> BootstrapStats {
    let n = values.len();
    if n == 0 {
        return BootstrapStats { mean: 0.0, std: 0.0, p2_5: 0.0, p97_5: 0.0 };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if resamples < 2 {
        return BootstrapStats { mean, std: 0.0, p2_5: mean, p97_5: mean };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> =
        (0..resamples).map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64).collect();
    let m = means.iter().sum::<f64>() / resamples as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    means.sort_unstable_by(f64::total_cmp);
    BootstrapStats { mean, std: var.sqrt(), p2_5: percentile(&means, 0.025), p97_5: percentile(&means, 0.975) }
}
