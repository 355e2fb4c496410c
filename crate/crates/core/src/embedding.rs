//! Shared query/document latent space.
//!
//! Text is mapped to a bag of hashed features (word unigrams plus padded
//! character n-grams of every token). Each feature adds `sign(h2) * tf` to
//! coordinate `h1 mod dim`, so the unnormalized vector is an exact integer
//! vector. The same encoder embeds queries and documents.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const BUCKET_SALT: u64 = 0x243f_6a88_85a3_08d3;
const SIGN_SALT: u64 = 0x1319_8a2e_0370_7344;

/// Norm tolerance for vectors flagged as unit length.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// A lowercased alphanumeric word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(String);

impl Token {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<Token> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| Token(s.to_string()))
        .collect()
}

/// Tokens as plain strings; convenient for metrics.
pub fn tokenize_str(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.0).collect()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seeded, platform-independent 64-bit hash.
pub fn stable_hash(bytes: &[u8], seed: u64, salt: u64) -> u64 {
    splitmix64(fnv1a(bytes) ^ seed ^ salt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub dim: usize,
    pub seed: u64,
    pub ngram_order: usize,
    pub use_word_unigrams: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self { dim: 256, seed: 0, ngram_order: 3, use_word_unigrams: true }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 8 {
            return Err(Error::InvalidConfig(format!("dim must be >= 8, got {}", self.dim)));
        }
        if self.dim > u32::MAX as usize {
            return Err(Error::InvalidConfig("dim does not fit in u32".into()));
        }
        if self.ngram_order < 1 {
            return Err(Error::InvalidConfig("ngram_order must be >= 1".into()));
        }
        Ok(())
    }
}

/// A vector in the shared latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding {
    values: Vec<f32>,
}

impl Embedding {
    pub fn new(values: Vec<f32>) -> Self {
        Self { values }
    }

    /// Normalizes `values` (computed in f64) and rounds to f32.
    /// Returns `None` for a zero or non-finite vector.
    pub fn normalized_from_f64(values: &[f64]) -> Option<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return None;
        }
        Some(Self { values: values.iter().map(|v| (v / norm) as f32).collect() })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.values
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn is_normalized(&self) -> bool {
        self.is_finite() && (self.norm() - 1.0).abs() <= UNIT_NORM_TOL
    }

    pub fn neg(&self) -> Self {
        Self { values: self.values.iter().map(|v| -v).collect() }
    }
}

/// Dot product accumulated in f64, index order.
pub fn dot_f32(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

pub fn inner_product(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch { expected: a.dim(), actual: b.dim() });
    }
    Ok(dot_f32(&a.values, &b.values))
}

/// Sparse integer vector: sorted `(coordinate, value)` pairs with no zeros.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseVec {
    pub entries: Vec<(u32, i32)>,
}

impl SparseVec {
    pub fn norm_sq(&self) -> i64 {
        self.entries.iter().map(|&(_, v)| i64::from(v) * i64::from(v)).sum()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| f64::from(v) * dense[i as usize]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Encoder {
    cfg: EncoderConfig,
}

impl Encoder {
    pub fn new(cfg: EncoderConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.cfg.dim
    }

    fn push_token_features(&self, token: &Token, out: &mut BTreeMap<String, i64>) {
        if self.cfg.use_word_unigrams {
            *out.entry(format!("w:{}", token.0)).or_default() += 1;
        }
        let padded: Vec<char> = format!("<{}>", token.0).chars().collect();
        let n = self.cfg.ngram_order;
        if padded.len() <= n {
            *out.entry(format!("c:{}", padded.iter().collect::<String>())).or_default() += 1;
        } else {
            for window in padded.windows(n) {
                *out.entry(format!("c:{}", window.iter().collect::<String>())).or_default() += 1;
            }
        }
    }

    /// Feature multiset of the text, keyed and iterated in lexicographic order.
    pub fn features(&self, tokens: &[Token]) -> BTreeMap<String, i64> {
        let mut feats = BTreeMap::new();
        for token in tokens {
            self.push_token_features(token, &mut feats);
        }
        feats
    }

    /// Maps a feature to its `(coordinate, sign)`.
    pub fn bucket(&self, feature: &str) -> (usize, i64) {
        let h1 = stable_hash(feature.as_bytes(), self.cfg.seed, BUCKET_SALT);
        let h2 = stable_hash(feature.as_bytes(), self.cfg.seed, SIGN_SALT);
        let sign = if h2 >> 63 == 1 { -1 } else { 1 };
        ((h1 % self.cfg.dim as u64) as usize, sign)
    }

    /// Unnormalized integer vector of a token sequence.
    pub fn raw_dense(&self, tokens: &[Token]) -> Vec<i64> {
        let mut acc = vec![0i64; self.cfg.dim];
        for (feature, tf) in self.features(tokens) {
            let (slot, sign) = self.bucket(&feature);
            acc[slot] += sign * tf;
        }
        acc
    }

    pub fn raw_sparse(&self, tokens: &[Token]) -> SparseVec {
        let entries = self
            .raw_dense(tokens)
            .into_iter()
            .enumerate()
            .filter(|&(_, v)| v != 0)
            .map(|(i, v)| (i as u32, v as i32))
            .collect();
        SparseVec { entries }
    }

    pub fn encode_tokens(&self, tokens: &[Token]) -> Result<Embedding> {
        if tokens.is_empty() {
            return Err(Error::EmptyText(None));
        }
        let raw: Vec<f64> = self.raw_dense(tokens).into_iter().map(|v| v as f64).collect();
        Embedding::normalized_from_f64(&raw)
            .ok_or_else(|| Error::DegenerateText(tokens.iter().map(Token::as_str).collect::<Vec<_>>().join(" ")))
    }

    pub fn encode(&self, text: &str) -> Result<Embedding> {
        self.encode_tokens(&tokenize(text))
    }
}
