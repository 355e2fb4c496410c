#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lirlab::corpus::{ingest_corpus, read_qrels, read_queries};
use lirlab::{DecoderConfig, EncoderConfig, Lab, Qrels, Query};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub struct DataSet {
    pub lab: Lab,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
}

/// Loads `data/<name>` and indexes it with the default encoder.
pub fn load(name: &str) -> DataSet {
    let dir = repo_root().join("data").join(name);
    let docs = ingest_corpus(&dir.join("corpus.jsonl")).unwrap();
    DataSet {
        lab: Lab::build(docs, EncoderConfig::default(), DecoderConfig::default()).unwrap(),
        queries: read_queries(&dir.join("queries.tsv")).unwrap(),
        qrels: read_qrels(&dir.join("qrels.txt")).unwrap(),
    }
}

pub fn lirlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lirlab")).args(args).env_remove("LIRLAB_SEED").output().unwrap()
}

pub fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}
