//! A loaded retrieval setup: corpus, index, shared encoder, decoder and
//! collection statistics. Immutable once built; share it across threads.

use std::collections::{BTreeMap, HashMap};

use crate::corpus::Document;
use crate::decoder::{BeamDecoder, DecoderConfig, Vocabulary};
use crate::embedding::{tokenize_str, Embedding, Encoder, EncoderConfig};
use crate::error::{Error, Result};
use crate::index::{build_index, IndexSnapshot, SearchResult};

/// Term counts of one document.
#[derive(Debug, Clone, Default)]
pub struct DocStats {
    pub tf: HashMap<String, u32>,
    pub len: u64,
}

impl DocStats {
    pub fn from_text(text: &str) -> Self {
        let mut stats = Self::default();
        for t in tokenize_str(text) {
            *stats.tf.entry(t).or_default() += 1;
            stats.len += 1;
        }
        stats
    }
}

/// Corpus-wide term frequencies.
#[derive(Debug, Clone, Default)]
pub struct CollectionStats {
    pub cf: BTreeMap<String, u64>,
    pub total: u64,
}

impl CollectionStats {
    pub fn p_collection(&self, term: &str) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.cf.get(term).copied().unwrap_or(0) as f64 / self.total as f64
    }
}

#[derive(Debug)]
pub struct Lab {
    docs: Vec<Document>,
    doc_stats: Vec<DocStats>,
    collection: CollectionStats,
    index: IndexSnapshot,
    encoder: Encoder,
    decoder: BeamDecoder,
}

impl Lab {
    /// Pairs an existing index with its corpus. Every indexed doc must be present.
    pub fn new(docs: Vec<Document>, index: IndexSnapshot, decoder_cfg: DecoderConfig) -> Result<Self> {
        let mut by_id: HashMap<String, Document> = docs.into_iter().map(|d| (d.doc_id.clone(), d)).collect();
        let mut aligned = Vec::with_capacity(index.len());
        for id in index.doc_ids() {
            aligned.push(by_id.remove(id).ok_or_else(|| Error::UnknownDocId(id.clone()))?);
        }
        if let Some(extra) = by_id.keys().min() {
            return Err(Error::InvalidConfig(format!("doc {extra:?} is not in the index")));
        }
        let encoder = Encoder::new(*index.encoder_config())?;
        let doc_stats: Vec<DocStats> = aligned.iter().map(|d| DocStats::from_text(&d.text)).collect();
        let mut collection = CollectionStats::default();
        for s in &doc_stats {
            for (t, &c) in &s.tf {
                *collection.cf.entry(t.clone()).or_default() += u64::from(c);
            }
            collection.total += s.len;
        }
        let vocab = Vocabulary::from_documents(&encoder, &aligned);
        let decoder = BeamDecoder::new(encoder.clone(), vocab, decoder_cfg)?;
        Ok(Self { docs: aligned, doc_stats, collection, index, encoder, decoder })
    }

    pub fn build(docs: Vec<Document>, encoder_cfg: EncoderConfig, decoder_cfg: DecoderConfig) -> Result<Self> {
        let index = build_index(&docs, encoder_cfg)?;
        Self::new(docs, index, decoder_cfg)
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn doc(&self, doc_id: &str) -> Result<&Document> {
        let pos = self.index.position(doc_id).ok_or_else(|| Error::UnknownDocId(doc_id.to_string()))?;
        Ok(&self.docs[pos])
    }

    pub fn doc_stats(&self, doc_id: &str) -> Result<&DocStats> {
        let pos = self.index.position(doc_id).ok_or_else(|| Error::UnknownDocId(doc_id.to_string()))?;
        Ok(&self.doc_stats[pos])
    }

    pub fn collection(&self) -> &CollectionStats {
        &self.collection
    }

    pub fn index(&self) -> &IndexSnapshot {
        &self.index
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn decoder(&self) -> &BeamDecoder {
        &self.decoder
    }

    pub fn encode(&self, text: &str) -> Result<Embedding> {
        self.encoder.encode(text)
    }

    pub fn doc_embedding(&self, doc_id: &str) -> Result<Embedding> {
        self.index.embedding(doc_id)
    }

    pub fn search(&self, q: &Embedding, k: usize) -> Result<SearchResult> {
        self.index.search(q, k)
    }

    pub fn search_text(&self, text: &str, k: usize) -> Result<SearchResult> {
        self.index.search(&self.encode(text)?, k)
    }
}
