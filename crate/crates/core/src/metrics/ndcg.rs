use std::collections::BTreeMap;

use crate::index::SearchResult;

fn gain(grade: u32) -> f64 {
    2f64.powi(grade as i32) - 1.0
}

/// Exponential-gain DCG of a grade sequence, truncated at `k`.
pub fn dcg(grades: impl IntoIterator<Item = u32>, k: usize) -> f64 {
    grades.into_iter().take(k).enumerate().map(|(i, g)| gain(g) / ((i + 2) as f64).log2()).sum()
}

/// nDCG@k of a ranked doc-id list. Unjudged docs have grade 0; no positive
/// judgements gives 0.
pub fn ndcg_for_ranking<'a>(
    ranking: impl IntoIterator<Item = &'a str>,
    grades: Option<&BTreeMap<String, u32>>,
    k: usize,
) -> f64 {
    let Some(grades) = grades else { return 0.0 };
    let mut ideal: Vec<u32> = grades.values().copied().filter(|&g| g > 0).collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal, k);
    if idcg == 0.0 {
        return 0.0;
    }
    let got = dcg(ranking.into_iter().map(|d| grades.get(d).copied().unwrap_or(0)), k);
    got / idcg
}

pub fn ndcg_at_k(result: &SearchResult, grades: Option<&BTreeMap<String, u32>>, k: usize) -> f64 {
    ndcg_for_ranking(result.doc_ids(), grades, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_gold_at(rank: usize) -> f64 {
        let mut grades = BTreeMap::new();
        grades.insert("gold".to_string(), 1);
        let names: Vec<String> = (1..=20).map(|i| if i == rank { "gold".into() } else { format!("d{i}") }).collect();
        ndcg_for_ranking(names.iter().map(String::as_str), Some(&grades), 10)
    }

    #[test]
    fn single_gold_positions() {
        assert_eq!(single_gold_at(1), 1.0);
        assert!((single_gold_at(2) - 0.6309).abs() < 5e-5);
        assert!((single_gold_at(5) - 0.3869).abs() < 5e-5);
        assert_eq!(single_gold_at(11), 0.0);
    }

    #[test]
    fn graded_ideal_prefix_is_one() {
        let grades: BTreeMap<String, u32> =
            [("a", 2), ("b", 1), ("c", 1)].iter().map(|(d, g)| (d.to_string(), *g)).collect();
        assert_eq!(ndcg_for_ranking(["a", "c", "b", "x"], Some(&grades), 10), 1.0);
        assert!(ndcg_for_ranking(["b", "a", "c"], Some(&grades), 10) < 1.0);
        assert_eq!(ndcg_for_ranking(["a"], Some(&grades), 1), 1.0);
    }

    #[test]
    fn no_judgements_is_zero() {
        assert_eq!(ndcg_for_ranking(["a"], None, 10), 0.0);
        let zero: BTreeMap<String, u32> = [("a".to_string(), 0)].into_iter().collect();
        assert_eq!(ndcg_for_ranking(["a"], Some(&zero), 10), 0.0);
    }
}
