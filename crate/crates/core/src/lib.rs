//! Dense-retrieval lab.
//!
//! A deterministic hashed encoder embeds queries and passages into one space,
//! an exact inner-product index retrieves over it, and a beam-search decoder
//! inverts the encoder. On top of that sit latent traversal from a query to its
//! gold passage, reformulation dataset generation, query suggesters (RM3,
//! epsilon-ball sampling, feedback traversal, plain sampling) and the
//! evaluation measures used to compare them.

pub mod corpus;
pub mod decoder;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod index;
pub mod lab;
pub mod metrics;
pub mod projection;
pub mod suggest;
pub mod synthetic;
pub mod traversal;

pub use corpus::{Document, Qrels, Query};
pub use decoder::{BeamDecoder, DecoderConfig, Decoding, QueryDecoder, Vocabulary};
pub use embedding::{inner_product, tokenize, Embedding, Encoder, EncoderConfig, Token};
pub use error::{Error, Result};
pub use index::{build_index, IndexSnapshot, ScoredDoc, SearchResult};
pub use lab::Lab;
pub use suggest::{SuggestConfig, Suggestion, SuggestionMethod, SuggestionSet};
