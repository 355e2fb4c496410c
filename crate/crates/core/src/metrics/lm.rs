//! Add-delta n-gram language model used as a fluency proxy.
//!
//! Outcomes are the training vocabulary plus one `<unk>` symbol. Contexts are
//! padded with `<s>`, which is never predicted.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::embedding::tokenize_str;
use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
const BOS: &str = "<s>";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NGramLm {
    order: usize,
    delta: f64,
    vocab: BTreeSet<String>,
    counts: HashMap<Vec<String>, HashMap<String, u64>>,
    totals: HashMap<Vec<String>, u64>,
}

impl NGramLm {
    pub fn new(order: usize, delta: f64) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidConfig("n-gram order must be >= 1".into()));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidConfig("delta must be in (0, 1]".into()));
        }
        Ok(Self { order, delta, vocab: BTreeSet::new(), counts: HashMap::new(), totals: HashMap::new() })
    }

    /// Trigram, delta 0.1, trained on `texts`.
    pub fn train_default<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut lm = Self::new(3, 0.1).expect("default config is valid");
        lm.train(texts);
        lm
    }

    /// Adds words to the outcome space without observing any n-grams.
    pub fn extend_vocabulary(&mut self, words: impl IntoIterator<Item = String>) {
        self.vocab.extend(words.into_iter().filter(|w| w != UNK && w != BOS));
    }

    pub fn train<'a>(&mut self, texts: impl IntoIterator<Item = &'a str>) {
        let sentences: Vec<Vec<String>> = texts.into_iter().map(tokenize_str).collect();
        for s in &sentences {
            self.vocab.extend(s.iter().cloned());
        }
        for s in &sentences {
            let padded = self.pad(s);
            for w in padded.windows(self.order) {
                let (ctx, next) = w.split_at(self.order - 1);
                *self.counts.entry(ctx.to_vec()).or_default().entry(next[0].clone()).or_default() += 1;
                *self.totals.entry(ctx.to_vec()).or_default() += 1;
            }
        }
    }

    fn pad(&self, tokens: &[String]) -> Vec<String> {
        let mut padded = vec![BOS.to_string(); self.order - 1];
        padded.extend(tokens.iter().map(|t| if self.vocab.contains(t) { t.clone() } else { UNK.to_string() }));
        padded
    }

    /// Vocabulary size plus the unknown-word outcome.
    pub fn outcome_count(&self) -> usize {
        self.vocab.len() + 1
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str)
    }

    /// P(word | context); `context` must hold `order - 1` symbols.
    pub fn prob(&self, context: &[String], word: &str) -> f64 {
        let word = if self.vocab.contains(word) { word } else { UNK };
        let c = self.counts.get(context).and_then(|m| m.get(word)).copied().unwrap_or(0);
        let total = self.totals.get(context).copied().unwrap_or(0);
        (c as f64 + self.delta) / (total as f64 + self.delta * self.outcome_count() as f64)
    }

    /// exp of the mean negative log-probability per token.
    pub fn text_perplexity(&self, text: &str) -> Result<f64> {
        let tokens = tokenize_str(text);
        if tokens.is_empty() {
            return Err(Error::EmptyText(None));
        }
        let padded = self.pad(&tokens);
        let nll: f64 =
            padded.windows(self.order).map(|w| -self.prob(&w[..self.order - 1], &w[self.order - 1]).ln()).sum();
        Ok((nll / tokens.len() as f64).exp())
    }

    /// Mean of per-text perplexities.
    pub fn perplexity<S: AsRef<str>>(&self, texts: &[S]) -> Result<f64> {
        if texts.is_empty() {
            return Err(Error::EmptyInput);
        }
        let sum = texts.iter().map(|t| self.text_perplexity(t.as_ref())).sum::<Result<f64>>()?;
        Ok(sum / texts.len() as f64)
    }
}
