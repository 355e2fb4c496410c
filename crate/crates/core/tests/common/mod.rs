#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use lirlab::corpus::{ingest_corpus, read_qrels, read_queries};
use lirlab::{DecoderConfig, Document, EncoderConfig, Lab, Qrels, Query};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn read_golden(name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(golden_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    serde_json::from_str(&text).unwrap()
}

/// Compares `value` with a frozen golden file. `LIRLAB_BLESS=1` rewrites it.
pub fn check_frozen(name: &str, value: &serde_json::Value) {
    let path = golden_path(name);
    if std::env::var_os("LIRLAB_BLESS").is_some() || !path.exists() {
        std::fs::write(&path, serde_json::to_string_pretty(value).unwrap() + "\n").unwrap();
        if std::env::var_os("LIRLAB_BLESS").is_none() {
            panic!("{name} did not exist; wrote it, audit and re-run");
        }
        return;
    }
    assert_eq!(&read_golden(name), value, "golden mismatch for {name}");
}

pub struct Dataset {
    pub docs: Vec<Document>,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
}

pub fn load(name: &str) -> Dataset {
    let dir = repo_root().join("data").join(name);
    Dataset {
        docs: ingest_corpus(&dir.join("corpus.jsonl")).unwrap(),
        queries: read_queries(&dir.join("queries.tsv")).unwrap(),
        qrels: read_qrels(&dir.join("qrels.txt")).unwrap(),
    }
}

pub fn fixture() -> &'static (Dataset, Lab) {
    static CELL: OnceLock<(Dataset, Lab)> = OnceLock::new();
    CELL.get_or_init(|| {
        let data = load("fixture");
        let lab = Lab::build(data.docs.clone(), EncoderConfig::default(), DecoderConfig::default()).unwrap();
        (data, lab)
    })
}

pub fn sample() -> &'static (Dataset, Lab) {
    static CELL: OnceLock<(Dataset, Lab)> = OnceLock::new();
    CELL.get_or_init(|| {
        let data = load("sample");
        let lab = Lab::build(data.docs.clone(), EncoderConfig::default(), DecoderConfig::default()).unwrap();
        (data, lab)
    })
}

pub fn small_lab(texts: &[&str]) -> Lab {
    let docs = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document { doc_id: format!("d{i}"), text: t.to_string(), title: None })
        .collect();
    Lab::build(docs, EncoderConfig::default(), DecoderConfig::default()).unwrap()
}
