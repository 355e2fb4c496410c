//! Query decoder: inverts the fixed encoder by beam search over corpus tokens,
//! scoring each candidate sequence by the inner product of its re-encoding
//! with the target vector.
//!
//! Because the encoder is a bag of integer-weighted features, the raw vector
//! of `seq + t` is `raw(seq) + raw(t)`. Beam scores are therefore updated
//! incrementally: the dot product with the target adds, and the squared norm
//! is tracked exactly in integers.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Qrels, Query};
use crate::embedding::{inner_product, tokenize, Embedding, Encoder, SparseVec, Token, UNIT_NORM_TOL};
use crate::error::{Error, Result};
use crate::index::IndexSnapshot;
use crate::metrics::bag_f1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub beam_width: usize,
    pub max_len: usize,
    pub shortlist_size: usize,
    pub sample_temperature: f64,
    pub seed: u64,
    pub num_samples: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self { beam_width: 16, max_len: 12, shortlist_size: 256, sample_temperature: 0.0, seed: 0, num_samples: 1 }
    }
}

impl DecoderConfig {
    /// Beam width 1 over a single-token shortlist.
    pub fn greedy() -> Self {
        Self { beam_width: 1, shortlist_size: 1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(1..=1024).contains(&self.beam_width) {
            return bad("beam_width must be in 1..=1024");
        }
        if !(1..=64).contains(&self.max_len) {
            return bad("max_len must be in 1..=64");
        }
        if self.shortlist_size < 1 {
            return bad("shortlist_size must be >= 1");
        }
        if !(self.sample_temperature >= 0.0 && self.sample_temperature.is_finite()) {
            return bad("sample_temperature must be finite and >= 0");
        }
        if self.num_samples < 1 {
            return bad("num_samples must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoding {
    pub text: String,
    pub reencode_similarity: f64,
    pub tokens: Vec<Token>,
}

/// Anything that maps a latent vector back to a query.
pub trait QueryDecoder: Sync {
    fn decode(&self, z: &Embedding) -> Result<Decoding>;
}

/// Decoder token inventory with precomputed sparse raw vectors.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<Token>,
    raw: Vec<SparseVec>,
    norm_sq: Vec<i64>,
}

impl Vocabulary {
    pub fn new(encoder: &Encoder, tokens: impl IntoIterator<Item = Token>) -> Self {
        let set: BTreeSet<Token> = tokens.into_iter().collect();
        let mut vocab = Self { tokens: Vec::new(), raw: Vec::new(), norm_sq: Vec::new() };
        for token in set {
            let raw = encoder.raw_sparse(std::slice::from_ref(&token));
            if raw.is_zero() {
                continue;
            }
            vocab.norm_sq.push(raw.norm_sq());
            vocab.raw.push(raw);
            vocab.tokens.push(token);
        }
        vocab
    }

    pub fn from_texts<'a>(encoder: &Encoder, texts: impl IntoIterator<Item = &'a str>) -> Self {
        Self::new(encoder, texts.into_iter().flat_map(tokenize))
    }

    pub fn from_documents(encoder: &Encoder, docs: &[Document]) -> Self {
        Self::from_texts(encoder, docs.iter().map(|d| d.text.as_str()))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn contains(&self, token: &Token) -> bool {
        self.tokens.binary_search(token).is_ok()
    }
}

#[derive(Clone)]
struct Beam {
    seq: Vec<u32>,
    key: Vec<u32>,
    raw: Vec<i64>,
    dot: f64,
    norm_sq: i64,
    score: f64,
}

struct Candidate {
    parent: usize,
    token: u32,
    dot: f64,
    norm_sq: i64,
    score: f64,
    rank_key: f64,
}

/// Beam-search inverter over a fixed vocabulary.
#[derive(Debug, Clone)]
pub struct BeamDecoder {
    encoder: Encoder,
    vocab: Vocabulary,
    cfg: DecoderConfig,
}

impl BeamDecoder {
    pub fn new(encoder: Encoder, vocab: Vocabulary, cfg: DecoderConfig) -> Result<Self> {
        cfg.validate()?;
        if vocab.is_empty() {
            return Err(Error::EmptyVocab);
        }
        Ok(Self { encoder, vocab, cfg })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.cfg
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn with_config(&self, cfg: DecoderConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { encoder: self.encoder.clone(), vocab: self.vocab.clone(), cfg })
    }

    fn check_target(&self, z: &Embedding) -> Result<Vec<f64>> {
        if z.dim() != self.encoder.dim() {
            return Err(Error::DimMismatch { expected: self.encoder.dim(), actual: z.dim() });
        }
        let norm = z.norm();
        if !z.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::UnnormalizedTarget(norm));
        }
        Ok(z.to_f64())
    }

    /// Top-C vocabulary indices by single-token alignment with the target,
    /// with each token's unnormalized dot product.
    fn shortlist(&self, target: &[f64]) -> Vec<(u32, f64)> {
        let mut scored: Vec<(u32, f64, f64)> = (0..self.vocab.len())
            .map(|i| {
                let dot = self.vocab.raw[i].dot_dense(target);
                (i as u32, dot, dot / (self.vocab.norm_sq[i] as f64).sqrt())
            })
            .collect();
        let by_score = |a: &(u32, f64, f64), b: &(u32, f64, f64)| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0));
        let c = self.cfg.shortlist_size.min(scored.len());
        if c < scored.len() {
            scored.select_nth_unstable_by(c - 1, by_score);
            scored.truncate(c);
        }
        scored.sort_unstable_by(by_score);
        scored.into_iter().map(|(i, dot, _)| (i, dot)).collect()
    }

    /// One beam-search run. With `rng`, survivors are drawn without replacement
    /// from a softmax over `score / temperature` (Gumbel top-B).
    fn search(&self, target: &[f64], mut rng: Option<&mut ChaCha8Rng>) -> Vec<u32> {
        let shortlist = self.shortlist(target);
        let dim = self.encoder.dim();
        let mut beams = vec![Beam {
            seq: Vec::new(),
            key: Vec::new(),
            raw: vec![0; dim],
            dot: 0.0,
            norm_sq: 0,
            score: f64::NEG_INFINITY,
        }];
        let mut best: Option<Beam> = None;

        for _ in 0..self.cfg.max_len {
            let mut cands = Vec::with_capacity(beams.len() * shortlist.len());
            for (p, beam) in beams.iter().enumerate() {
                for &(t, t_dot) in &shortlist {
                    let tv = &self.vocab.raw[t as usize];
                    let cross: i64 = tv.entries.iter().map(|&(i, v)| beam.raw[i as usize] * i64::from(v)).sum();
                    let norm_sq = beam.norm_sq + 2 * cross + self.vocab.norm_sq[t as usize];
                    if norm_sq <= 0 {
                        continue;
                    }
                    let dot = beam.dot + t_dot;
                    let score = dot / (norm_sq as f64).sqrt();
                    cands.push(Candidate { parent: p, token: t, dot, norm_sq, score, rank_key: score });
                }
            }
            if cands.is_empty() {
                break;
            }
            if let Some(rng) = rng.as_deref_mut() {
                let temp = self.cfg.sample_temperature;
                for c in &mut cands {
                    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                    c.rank_key = c.score + temp * -(-u.ln()).ln();
                }
            }
            cands.sort_unstable_by(|a, b| {
                b.rank_key
                    .total_cmp(&a.rank_key)
                    .then_with(|| beams[a.parent].seq.cmp(&beams[b.parent].seq))
                    .then(a.token.cmp(&b.token))
            });

            let mut seen = HashSet::new();
            let mut next = Vec::with_capacity(self.cfg.beam_width);
            for c in cands {
                let parent = &beams[c.parent];
                let mut key = parent.key.clone();
                let at = key.partition_point(|&x| x <= c.token);
                key.insert(at, c.token);
                if !seen.insert(key.clone()) {
                    continue;
                }
                let mut raw = parent.raw.clone();
                for &(i, v) in &self.vocab.raw[c.token as usize].entries {
                    raw[i as usize] += i64::from(v);
                }
                let mut seq = parent.seq.clone();
                seq.push(c.token);
                next.push(Beam { seq, key, raw, dot: c.dot, norm_sq: c.norm_sq, score: c.score });
                if next.len() == self.cfg.beam_width {
                    break;
                }
            }
            for beam in &next {
                if best.as_ref().is_none_or(|b| better(beam, b)) {
                    best = Some(beam.clone());
                }
            }
            beams = next;
        }
        best.map(|b| b.seq).unwrap_or_default()
    }

    fn finish(&self, seq: &[u32], z: &Embedding) -> Result<Decoding> {
        let tokens: Vec<Token> = seq.iter().map(|&i| self.vocab.tokens[i as usize].clone()).collect();
        let reencoded = self.encoder.encode_tokens(&tokens)?;
        let text = tokens.iter().map(Token::as_str).collect::<Vec<_>>().join(" ");
        Ok(Decoding { text, reencode_similarity: inner_product(&reencoded, z)?, tokens })
    }

    /// Deterministic decoding (temperature ignored).
    pub fn decode_greedy_beam(&self, z: &Embedding) -> Result<Decoding> {
        let target = self.check_target(z)?;
        let seq = self.search(&target, None);
        self.finish(&seq, z)
    }

    /// `num_samples` decodings; duplicates removed in first-seen order.
    pub fn decode_samples(&self, z: &Embedding) -> Result<Vec<Decoding>> {
        let target = self.check_target(z)?;
        if self.cfg.sample_temperature == 0.0 {
            return Ok(vec![self.finish(&self.search(&target, None), z)?]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for _ in 0..self.cfg.num_samples {
            let seq = self.search(&target, Some(&mut rng));
            let dec = self.finish(&seq, z)?;
            if seen.insert(dec.text.clone()) {
                out.push(dec);
            }
        }
        Ok(out)
    }
}

/// Higher score, then shorter, then lexicographically smaller.
fn better(a: &Beam, b: &Beam) -> bool {
    match a.score.total_cmp(&b.score) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (a.seq.len(), &a.seq) < (b.seq.len(), &b.seq),
    }
}

impl QueryDecoder for BeamDecoder {
    fn decode(&self, z: &Embedding) -> Result<Decoding> {
        self.decode_greedy_beam(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub mean_f1: f64,
    pub mean_cosine: f64,
    pub queries: usize,
}

/// decode(encode(q)) for every query: token F1 and re-encoding cosine.
pub fn round_trip_eval(queries: &[Query], encoder: &Encoder, decoder: &dyn QueryDecoder) -> Result<RoundTripReport> {
    if queries.is_empty() {
        return Err(Error::EmptyInput);
    }
    let per: Vec<(f64, f64)> = queries
        .par_iter()
        .map(|q| {
            let z = encoder.encode(&q.text)?;
            let dec = decoder.decode(&z)?;
            let f1 = bag_f1(&tokenize(&q.text), &tokenize(&dec.text));
            let cos = inner_product(&encoder.encode(&dec.text)?, &z)?;
            Ok((f1, cos))
        })
        .collect::<Result<_>>()?;
    let n = per.len() as f64;
    Ok(RoundTripReport {
        mean_f1: per.iter().map(|p| p.0).sum::<f64>() / n,
        mean_cosine: per.iter().map(|p| p.1).sum::<f64>() / n,
        queries: per.len(),
    })
}

/// Share of gold paragraphs whose decoded query retrieves them within top-k.
pub fn paragraph_to_query_eval(
    qrels: &Qrels,
    docs: &[Document],
    index: &IndexSnapshot,
    encoder: &Encoder,
    decoder: &dyn QueryDecoder,
    ks: &[usize],
) -> Result<BTreeMap<usize, f64>> {
    let max_k = ks.iter().copied().max().ok_or(Error::EmptyInput)?;
    let texts: BTreeMap<&str, &str> = docs.iter().map(|d| (d.doc_id.as_str(), d.text.as_str())).collect();
    let mut golds = BTreeSet::new();
    for qid in qrels.query_ids() {
        for (doc_id, &grade) in qrels.for_query(qid).into_iter().flatten() {
            if grade > 0 {
                golds.insert(doc_id.as_str());
            }
        }
    }
    if golds.is_empty() {
        return Err(Error::EmptyInput);
    }
    let ranks: Vec<Option<usize>> = golds
        .par_iter()
        .map(|&doc_id| {
            let text = texts.get(doc_id).ok_or_else(|| Error::UnknownDocId(doc_id.to_string()))?;
            let dec = decoder.decode(&encoder.encode(text)?)?;
            index.rank_of(&encoder.encode(&dec.text)?, doc_id, max_k)
        })
        .collect::<Result<_>>()?;
    let n = ranks.len() as f64;
    Ok(ks.iter().map(|&k| (k, ranks.iter().filter(|r| r.is_some_and(|r| r <= k)).count() as f64 / n)).collect())
}
