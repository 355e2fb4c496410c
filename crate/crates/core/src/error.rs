use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("text has no tokens{}", doc_suffix(.0))]
    EmptyText(Option<String>),
    #[error("text encodes to the zero vector: {0:?}")]
    DegenerateText(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),
    #[error("duplicate query_id {0:?}")]
    DuplicateQueryId(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unknown doc_id {0:?}")]
    UnknownDocId(String),
    #[error("unknown query_id {0:?}")]
    UnknownQueryId(String),
    #[error("decoder vocabulary is empty")]
    EmptyVocab,
    #[error("decoder target is not unit-norm (norm {0})")]
    UnnormalizedTarget(f64),
    #[error("interpolated point has zero norm at step {0}")]
    DegeneratePoint(usize),
    #[error("invalid step count {0}; need k >= 1")]
    InvalidStepCount(usize),
    #[error("query {0:?} has no gold document in qrels")]
    MissingGold(String),
    #[error("input is empty")]
    EmptyInput,
    #[error("query is empty")]
    EmptyQuery,
    #[error("need at least 2 suggestions, got {0}")]
    TooFewSuggestions(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("index file: {0}")]
    IndexFormat(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn doc_suffix(doc: &Option<String>) -> String {
    match doc {
        Some(id) => format!(" (doc {id:?})"),
        None => String::new(),
    }
}

impl Error {
    /// Stable machine-readable code, used in CLI `error: <Code>:` lines and API bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyText(_) => "EmptyText",
            Error::DegenerateText(_) => "DegenerateText",
            Error::DimMismatch { .. } => "DimMismatch",
            Error::ParseError { .. } => "ParseError",
            Error::DuplicateDocId(_) => "DuplicateDocId",
            Error::DuplicateQueryId(_) => "DuplicateQueryId",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::UnknownDocId(_) => "UnknownDocId",
            Error::UnknownQueryId(_) => "UnknownQueryId",
            Error::EmptyVocab => "EmptyVocab",
            Error::UnnormalizedTarget(_) => "UnnormalizedTarget",
            Error::DegeneratePoint(_) => "DegeneratePoint",
            Error::InvalidStepCount(_) => "InvalidStepCount",
            Error::MissingGold(_) => "MissingGold",
            Error::EmptyInput => "EmptyInput",
            Error::EmptyQuery => "EmptyQuery",
            Error::TooFewSuggestions(_) => "TooFewSuggestions",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::IndexFormat(_) => "IndexFormat",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}
