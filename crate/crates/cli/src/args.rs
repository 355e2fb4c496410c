use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lirlab::SuggestionMethod;

fn method(s: &str) -> Result<SuggestionMethod, String> {
    s.parse().map_err(|e: lirlab::Error| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "lirlab", version, about = "Dense-retrieval query decoding, latent traversal and query suggestion")]
pub struct Cli {
    /// Global seed for every random stream.
    #[arg(long, global = true, env = "LIRLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a JSONL corpus and optionally write a normalized copy.
    Ingest(IngestArgs),
    /// Encode a corpus and write the index file.
    Index(IndexArgs),
    /// Decode a text, an indexed document or a raw vector into a query.
    Decode(DecodeArgs),
    /// Decode every step of the line from a query to a document.
    Traverse(TraverseArgs),
    /// Generate the filtered reformulation dataset.
    GenDataset(GenDatasetArgs),
    /// Produce query suggestions with one method.
    Suggest(SuggestArgs),
    /// Evaluate suggestion methods over a judged query set.
    Eval(EvalArgs),
    /// Serve the JSON API.
    Serve(ServeArgs),
    /// Render a saved evaluation report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub ngram_order: usize,
    #[arg(long)]
    pub no_word_unigrams: bool,
}

/// An index plus the corpus it was built from.
#[derive(Debug, Args, Clone)]
pub struct LabArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub beam_width: usize,
    #[arg(long, default_value_t = 12)]
    pub max_len: usize,
    #[arg(long, default_value_t = 256)]
    pub shortlist: usize,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct DecodeSource {
    #[arg(long, group = "source")]
    pub text: Option<String>,
    #[arg(long, group = "source")]
    pub doc_id: Option<String>,
    /// Raw little-endian f32 values, exactly `dim` of them.
    #[arg(long, group = "source")]
    pub vector_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub lab: LabArgs,
    #[command(flatten)]
    pub source: DecodeSource,
}

#[derive(Debug, Args)]
pub struct TraverseArgs {
    #[command(flatten)]
    pub lab: LabArgs,
    /// Query id, resolved through `--queries`.
    #[arg(long, requires = "queries", conflicts_with = "query")]
    pub query_id: Option<String>,
    #[arg(long, required_unless_present = "query_id")]
    pub query: Option<String>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Target document; defaults to the gold document from `--qrels`.
    #[arg(long)]
    pub doc_id: Option<String>,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct GenDatasetArgs {
    #[command(flatten)]
    pub lab: LabArgs,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// Records JSONL; the training view and statistics are written alongside.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SuggestArgs {
    #[command(flatten)]
    pub lab: LabArgs,
    /// rm3, sampling, prf or plain.
    #[arg(long, value_parser = method)]
    pub method: SuggestionMethod,
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub lab: LabArgs,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = method, default_value = "rm3,sampling,prf,plain")]
    pub methods: Vec<SuggestionMethod>,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
    /// Report JSON; a CSV table is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-query suggestions with metrics, as JSONL.
    #[arg(long)]
    pub per_query: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub lab: LabArgs,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Static client assets served at `/`.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
    pub format: ReportFormat,
}
