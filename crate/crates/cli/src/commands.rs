use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lirlab::corpus::{ingest_corpus, read_qrels, read_queries, write_corpus};
use lirlab::eval::{evaluate, EvalOptions};
use lirlab::metrics::EvalReport;
use lirlab::suggest::suggest;
use lirlab::traversal::{dataset_histograms, generate_dataset, query_seed, traverse_and_decode, write_jsonl};
use lirlab::SuggestConfig;
use lirlab::{build_index, inner_product, DecoderConfig, Embedding, EncoderConfig, IndexSnapshot, Lab, Qrels, Query};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::UsageError;

pub fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Index(a) => index(a, seed),
        Command::Decode(a) => decode(a),
        Command::Traverse(a) => traverse(a),
        Command::GenDataset(a) => gen_dataset(a, seed),
        Command::Suggest(a) => suggest_cmd(a, seed),
        Command::Eval(a) => eval(a, seed),
        Command::Serve(a) => crate::server::serve(a, seed),
        Command::Report(a) => report(a),
    }
}

impl LabArgs {
    pub fn decoder_config(&self) -> DecoderConfig {
        DecoderConfig {
            beam_width: self.beam_width,
            max_len: self.max_len,
            shortlist_size: self.shortlist,
            ..DecoderConfig::default()
        }
    }

    pub fn load(&self) -> Result<Lab> {
        let docs = ingest_corpus(&self.corpus).with_context(|| format!("reading {}", self.corpus.display()))?;
        let index = IndexSnapshot::read(&self.index).with_context(|| format!("reading {}", self.index.display()))?;
        Ok(Lab::new(docs, index, self.decoder_config())?)
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(std::io::stdout().lock(), "{text}")?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

/// `out.jsonl` -> `out.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn ingest(a: IngestArgs) -> Result<()> {
    let docs = ingest_corpus(&a.corpus)?;
    if let Some(out) = &a.out {
        write_corpus(out, &docs)?;
    }
    print_json(&json!({ "docs": docs.len() }))
}

fn index(a: IndexArgs, seed: u64) -> Result<()> {
    let cfg = EncoderConfig { dim: a.dim, seed, ngram_order: a.ngram_order, use_word_unigrams: !a.no_word_unigrams };
    let docs = ingest_corpus(&a.corpus)?;
    let idx = build_index(&docs, cfg)?;
    idx.write(&a.out)?;
    print_json(&json!({ "docs": idx.len(), "dim": idx.dim(), "out": a.out }))
}

fn read_vector(path: &Path, dim: usize) -> Result<Embedding> {
    let bytes = fs::read(path)?;
    if bytes.len() != dim * 4 {
        return Err(lirlab::Error::DimMismatch { expected: dim, actual: bytes.len() / 4 }.into());
    }
    Ok(Embedding::new(bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect()))
}

fn decode(a: DecodeArgs) -> Result<()> {
    let lab = a.lab.load()?;
    let z = match (&a.source.text, &a.source.doc_id, &a.source.vector_file) {
        (Some(t), _, _) => lab.encode(t)?,
        (_, Some(id), _) => lab.doc_embedding(id)?,
        (_, _, Some(f)) => read_vector(f, lab.index().dim())?,
        _ => unreachable!("clap enforces exactly one source"),
    };
    let d = lab.decoder().decode_greedy_beam(&z)?;
    print_json(&json!({ "text": d.text, "reencode_similarity": d.reencode_similarity }))
}

fn traverse(a: TraverseArgs) -> Result<()> {
    let lab = a.lab.load()?;
    let qrels = a.qrels.as_deref().map(read_qrels).transpose()?.unwrap_or_default();
    let query = match (&a.query_id, &a.query) {
        (Some(id), _) => {
            let queries = read_queries(a.queries.as_deref().expect("clap requires --queries"))?;
            queries.into_iter().find(|q| &q.query_id == id).ok_or_else(|| lirlab::Error::UnknownQueryId(id.clone()))?
        }
        (None, Some(text)) => Query::new("query", text.clone()),
        (None, None) => unreachable!("clap requires a query"),
    };
    let gold = match &a.doc_id {
        Some(d) => d.clone(),
        None => qrels
            .gold(&query.query_id)
            .ok_or_else(|| UsageError("--doc-id is required unless --qrels names a gold document".into()))?
            .to_string(),
    };
    let steps = traverse_and_decode(&lab, &query, &gold, a.steps, &qrels)?;
    let original = lab.search_text(&query.text, lirlab::traversal::EVAL_DEPTH)?;
    let gold_emb = lab.doc_embedding(&gold)?;
    print_json(&json!({
        "query": query.text,
        "doc_id": gold,
        "original_ip": inner_product(&lab.encode(&query.text)?, &gold_emb)?,
        "original_gold_rank": original.position(&gold),
        "steps": steps,
    }))
}

fn gen_dataset(a: GenDatasetArgs, seed: u64) -> Result<()> {
    let lab = a.lab.load()?;
    let queries = read_queries(&a.queries)?;
    let qrels = read_qrels(&a.qrels)?;
    let ds = generate_dataset(&lab, &queries, &qrels, a.k, seed)?;
    let mut out = create(&a.out)?;
    write_jsonl(&mut out, &ds.records)?;
    out.flush()?;
    let train_path = sibling(&a.out, "train.jsonl");
    let mut train = create(&train_path)?;
    write_jsonl(&mut train, &ds.training)?;
    train.flush()?;
    let stats_path = sibling(&a.out, "stats.json");
    let summary = json!({
        "stats": ds.stats,
        "missing_gold": ds.missing_gold,
        "histograms": dataset_histograms(&ds.records, &ds.originals)?,
    });
    let mut stats = create(&stats_path)?;
    serde_json::to_writer_pretty(&mut stats, &summary)?;
    stats.flush()?;
    print_json(&ds.stats)
}

fn suggest_cmd(a: SuggestArgs, seed: u64) -> Result<()> {
    let lab = a.lab.load()?;
    let query = Query::new("query", a.query);
    let cfg = SuggestConfig::default().reseeded(query_seed(seed, &query.text));
    print_json(&suggest(&lab, a.method, &query, &cfg, a.n)?)
}

fn eval(a: EvalArgs, seed: u64) -> Result<()> {
    let lab = a.lab.load()?;
    let queries = read_queries(&a.queries)?;
    let qrels: Qrels = read_qrels(&a.qrels)?;
    let opts = EvalOptions { methods: a.methods, resamples: a.resamples, seed, ..EvalOptions::default() };
    let (report, per_query) = evaluate(&lab, &queries, &qrels, &opts)?;
    let mut out = create(&a.out)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    out.flush()?;
    fs::write(a.out.with_extension("csv"), report.to_csv())?;
    if let Some(path) = &a.per_query {
        let mut w = create(path)?;
        write_jsonl(&mut w, &per_query)?;
        w.flush()?;
    }
    print!("{}", report.to_table());
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let report: EvalReport = serde_json::from_str(&text).map_err(lirlab::Error::from)?;
    report.validate().map_err(lirlab::Error::InvalidConfig)?;
    match a.format {
        ReportFormat::Table => print!("{}", report.to_table()),
        ReportFormat::Csv => print!("{}", report.to_csv()),
        ReportFormat::Json => print_json(&report)?,
    }
    Ok(())
}
