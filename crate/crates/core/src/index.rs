//! Exact maximum-inner-product search over document embeddings.
//!
//! File layout (all integers little endian):
//!
//! ```text
//! "LIRX" | version u32 | dim u32 | doc count u64
//! | config JSON length u32 | config JSON
//! | per doc: id length u32 | id UTF-8
//! | f32 matrix, row-major
//! ```

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::embedding::{dot_f32, Embedding, Encoder, EncoderConfig};
use crate::error::{Error, Result};

pub const INDEX_MAGIC: &[u8; 4] = b"LIRX";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub k: usize,
    pub entries: Vec<ScoredDoc>,
}

impl SearchResult {
    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    /// 1-based position of `doc_id`, if retrieved.
    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.doc_id == doc_id).map(|p| p + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexSnapshot {
    encoder_cfg: EncoderConfig,
    doc_ids: Vec<String>,
    matrix: Vec<f32>,
    positions: HashMap<String, usize>,
}

/// Descending score, then ascending row (rows are sorted by doc_id).
fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

impl IndexSnapshot {
    fn from_parts(encoder_cfg: EncoderConfig, doc_ids: Vec<String>, matrix: Vec<f32>) -> Self {
        let positions = doc_ids.iter().enumerate().map(|(i, d)| (d.clone(), i)).collect();
        Self { encoder_cfg, doc_ids, matrix, positions }
    }

    pub fn encoder_config(&self) -> &EncoderConfig {
        &self.encoder_cfg
    }

    pub fn dim(&self) -> usize {
        self.encoder_cfg.dim
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.positions.get(doc_id).copied()
    }

    pub fn row(&self, pos: usize) -> &[f32] {
        let dim = self.dim();
        &self.matrix[pos * dim..(pos + 1) * dim]
    }

    pub fn embedding(&self, doc_id: &str) -> Result<Embedding> {
        let pos = self.position(doc_id).ok_or_else(|| Error::UnknownDocId(doc_id.to_string()))?;
        Ok(Embedding::new(self.row(pos).to_vec()))
    }

    fn check_dim(&self, q: &Embedding) -> Result<()> {
        if q.dim() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), actual: q.dim() });
        }
        Ok(())
    }

    /// Inner product of `q` with every row, in row order.
    pub fn scores(&self, q: &Embedding) -> Result<Vec<f64>> {
        self.check_dim(q)?;
        let dim = self.dim();
        Ok(self.matrix.chunks_exact(dim).map(|row| dot_f32(row, q.as_slice())).collect())
    }

    pub fn search(&self, q: &Embedding, k: usize) -> Result<SearchResult> {
        if k == 0 {
            return Err(Error::InvalidConfig("search depth k must be >= 1".into()));
        }
        let mut scored: Vec<(usize, f64)> = self.scores(q)?.into_iter().enumerate().collect();
        let depth = k.min(scored.len());
        if depth < scored.len() {
            scored.select_nth_unstable_by(depth - 1, rank_order);
            scored.truncate(depth);
        }
        scored.sort_unstable_by(rank_order);
        let entries =
            scored.into_iter().map(|(pos, score)| ScoredDoc { doc_id: self.doc_ids[pos].clone(), score }).collect();
        Ok(SearchResult { k, entries })
    }

    /// 1-based rank of `doc_id` under `q`, or `None` when it falls outside `max_k`.
    pub fn rank_of(&self, q: &Embedding, doc_id: &str, max_k: usize) -> Result<Option<usize>> {
        let target = self.position(doc_id).ok_or_else(|| Error::UnknownDocId(doc_id.to_string()))?;
        let scores = self.scores(q)?;
        let mine = (target, scores[target]);
        let ahead =
            scores.iter().enumerate().filter(|&(pos, &s)| rank_order(&(pos, s), &mine) == Ordering::Less).count();
        let rank = ahead + 1;
        Ok((rank <= max_k).then_some(rank))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let cfg_json = serde_json::to_vec(&self.encoder_cfg)?;
        let mut out = Vec::with_capacity(32 + cfg_json.len() + self.matrix.len() * 4);
        out.extend_from_slice(INDEX_MAGIC);
        out.extend_from_slice(&INDEX_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&(cfg_json.len() as u32).to_le_bytes());
        out.extend_from_slice(&cfg_json);
        for id in &self.doc_ids {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
        }
        for v in &self.matrix {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != INDEX_MAGIC {
            return Err(Error::IndexFormat("bad magic".into()));
        }
        let version = r.u32()?;
        if version != INDEX_VERSION {
            return Err(Error::IndexFormat(format!("unsupported version {version}")));
        }
        let dim = r.u32()? as usize;
        let count = usize::try_from(r.u64()?).map_err(|_| Error::IndexFormat("doc count".into()))?;
        let cfg_len = r.u32()? as usize;
        let cfg: EncoderConfig = serde_json::from_slice(r.take(cfg_len)?)?;
        cfg.validate()?;
        if cfg.dim != dim {
            return Err(Error::IndexFormat(format!("header dim {dim} != config dim {}", cfg.dim)));
        }
        let mut doc_ids = Vec::with_capacity(count);
        for _ in 0..count {
            let len = r.u32()? as usize;
            let id = std::str::from_utf8(r.take(len)?).map_err(|_| Error::IndexFormat("doc_id is not UTF-8".into()))?;
            doc_ids.push(id.to_string());
        }
        let body = r.take(count * dim * 4)?;
        if r.at != bytes.len() {
            return Err(Error::IndexFormat("trailing bytes".into()));
        }
        let matrix = body.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        Ok(Self::from_parts(cfg, doc_ids, matrix))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::IndexFormat("truncated file".into()))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(u64::from_le_bytes(a))
    }
}

/// Encodes every document; rows are ordered by ascending doc_id.
pub fn build_index(docs: &[Document], cfg: EncoderConfig) -> Result<IndexSnapshot> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let encoder = Encoder::new(cfg)?;
    let mut order: Vec<&Document> = docs.iter().collect();
    order.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    if let Some(w) = order.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
        return Err(Error::DuplicateDocId(w[0].doc_id.clone()));
    }
    let rows: Vec<Embedding> = order
        .par_iter()
        .map(|doc| {
            encoder.encode(&doc.text).map_err(|e| match e {
                Error::EmptyText(_) => Error::EmptyText(Some(doc.doc_id.clone())),
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let matrix = rows.into_iter().flat_map(Embedding::into_vec).collect();
    let doc_ids = order.into_iter().map(|d| d.doc_id.clone()).collect();
    Ok(IndexSnapshot::from_parts(cfg, doc_ids, matrix))
}
