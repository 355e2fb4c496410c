//! Corpus, query and qrels records plus their on-disk formats.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub text: String,
}

impl Query {
    pub fn new(query_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self { query_id: query_id.into(), text: text.into() }
    }
}

/// Graded relevance labels: query_id -> doc_id -> grade.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrels {
    grades: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) {
        self.grades.entry(query_id.to_string()).or_default().insert(doc_id.to_string(), grade);
    }

    /// Judgements for one query; empty map when none.
    pub fn for_query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.grades.get(query_id)
    }

    pub fn grade(&self, query_id: &str, doc_id: &str) -> u32 {
        self.grades.get(query_id).and_then(|m| m.get(doc_id)).copied().unwrap_or(0)
    }

    /// Traversal target: highest grade, ties to the smallest doc_id. Grade-0 docs never qualify.
    pub fn gold(&self, query_id: &str) -> Option<&str> {
        self.grades
            .get(query_id)?
            .iter()
            .filter(|(_, &g)| g > 0)
            .fold(None, |best: Option<(&str, u32)>, (d, &g)| match best {
                Some((_, bg)) if bg >= g => best,
                _ => Some((d.as_str(), g)),
            })
            .map(|(d, _)| d)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.grades.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.grades.is_empty()
    }

    pub fn len(&self) -> usize {
        self.grades.values().map(BTreeMap::len).sum()
    }
}

/// Parses corpus JSONL. Blank lines are skipped; line numbers are 1-based.
pub fn parse_corpus(content: &str) -> Result<Vec<Document>> {
    #[derive(Deserialize)]
    struct Raw {
        doc_id: String,
        text: String,
        #[serde(default)]
        title: Option<String>,
    }

    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: Raw =
            serde_json::from_str(line).map_err(|e| Error::ParseError { line: i + 1, message: e.to_string() })?;
        if raw.text.is_empty() {
            return Err(Error::ParseError { line: i + 1, message: "empty \"text\"".into() });
        }
        if !seen.insert(raw.doc_id.clone()) {
            return Err(Error::DuplicateDocId(raw.doc_id));
        }
        docs.push(Document { doc_id: raw.doc_id, text: raw.text, title: raw.title });
    }
    Ok(docs)
}

pub fn ingest_corpus(path: &Path) -> Result<Vec<Document>> {
    parse_corpus(&fs::read_to_string(path)?)
}

pub fn write_corpus(path: &Path, docs: &[Document]) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parses `query_id\ttext` lines.
pub fn parse_queries(content: &str) -> Result<Vec<Query>> {
    let mut seen = HashSet::new();
    let mut queries = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::ParseError { line: i + 1, message: "expected query_id<TAB>text".into() })?;
        if id.is_empty() || text.trim().is_empty() {
            return Err(Error::ParseError { line: i + 1, message: "empty query_id or text".into() });
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateQueryId(id.to_string()));
        }
        queries.push(Query::new(id, text));
    }
    Ok(queries)
}

pub fn read_queries(path: &Path) -> Result<Vec<Query>> {
    parse_queries(&fs::read_to_string(path)?)
}

pub fn write_queries(path: &Path, queries: &[Query]) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for q in queries {
        writeln!(out, "{}\t{}", q.query_id, q.text)?;
    }
    Ok(())
}

/// Parses TREC qrels: `query_id iter doc_id grade`.
pub fn parse_qrels(content: &str) -> Result<Qrels> {
    let mut qrels = Qrels::default();
    for (i, line) in content.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, did, grade] = fields[..] else {
            return Err(Error::ParseError { line: i + 1, message: "expected 4 fields".into() });
        };
        let grade: u32 = grade.parse().map_err(|_| Error::ParseError {
            line: i + 1,
            message: format!("grade must be a non-negative integer, got {grade:?}"),
        })?;
        qrels.insert(qid, did, grade);
    }
    Ok(qrels)
}

pub fn read_qrels(path: &Path) -> Result<Qrels> {
    parse_qrels(&fs::read_to_string(path)?)
}

pub fn write_qrels(path: &Path, qrels: &Qrels) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for (qid, docs) in &qrels.grades {
        for (did, grade) in docs {
            writeln!(out, "{qid} 0 {did} {grade}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_in_file_order() {
        let src = r#"{"doc_id":"b","text":"two"}
{"doc_id":"a","text":"one","title":"T"}
{"doc_id":"c","text":"three"}
"#;
        let docs = parse_corpus(src).unwrap();
        let ids: Vec<_> = docs.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["b", "a", "c"]);
        assert_eq!(docs[1].title.as_deref(), Some("T"));
    }

    #[test]
    fn duplicate_doc_id_rejected() {
        let src = "{\"doc_id\":\"a\",\"text\":\"x\"}\n{\"doc_id\":\"a\",\"text\":\"y\"}\n";
        assert!(matches!(parse_corpus(src), Err(Error::DuplicateDocId(id)) if id == "a"));
    }

    #[test]
    fn missing_text_reports_line() {
        let src = "{\"doc_id\":\"a\",\"text\":\"x\"}\n\n{\"doc_id\":\"b\"}\n";
        assert!(matches!(parse_corpus(src), Err(Error::ParseError { line: 3, .. })));
    }

    #[test]
    fn queries_tsv() {
        let qs = parse_queries("q1\tnebl coin price\nq2\twhere is quincy\n").unwrap();
        assert_eq!(qs[1], Query::new("q2", "where is quincy"));
        assert!(matches!(parse_queries("q1 no tab\n"), Err(Error::ParseError { line: 1, .. })));
    }

    #[test]
    fn qrels_gold_picks_highest_grade_then_smallest_id() {
        let qrels = parse_qrels("q1 0 d9 1\nq1 0 d3 2\nq1 0 d2 2\nq2 0 d1 0\n").unwrap();
        assert_eq!(qrels.gold("q1"), Some("d2"));
        assert_eq!(qrels.gold("q2"), None);
        assert_eq!(qrels.grade("q1", "d9"), 1);
        assert_eq!(qrels.grade("q1", "zz"), 0);
        assert!(parse_qrels("q1 0 d1 -1\n").is_err());
    }
}
