//! JSON API over one immutable lab snapshot plus an in-memory session table.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use anyhow::Context;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lirlab::corpus::{read_qrels, read_queries};
use lirlab::projection::pca_2d;
use lirlab::suggest::{suggest, MAX_SUGGESTIONS};
use lirlab::traversal::{grades_or_gold, query_seed, traverse_with_grades, DEFAULT_STEPS, EVAL_DEPTH};
use lirlab::{Decoding, Document, Embedding, Lab, Qrels, Query, SuggestConfig, SuggestionMethod, SuggestionSet};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::ServeArgs;

pub struct AppState {
    lab: Lab,
    qrels: Option<Qrels>,
    queries: Vec<Query>,
    seed: u64,
    sessions: Mutex<Sessions>,
}

#[derive(Default)]
struct Sessions {
    next_id: u64,
    table: BTreeMap<String, SessionState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub history: Vec<SessionStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStep {
    pub query: String,
    pub chosen_suggestion: Option<String>,
    pub results: Vec<ResultSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub doc_id: String,
    pub score: f64,
}

impl AppState {
    pub fn new(lab: Lab, qrels: Option<Qrels>, queries: Vec<Query>, seed: u64) -> Self {
        Self { lab, qrels, queries, seed, sessions: Mutex::default() }
    }

    /// Query id for a known query text, so judged queries get metrics.
    fn query_id_for(&self, text: &str) -> Option<&str> {
        self.queries.iter().find(|q| q.text == text).map(|q| q.query_id.as_str())
    }

    fn gold_for(&self, query_id: Option<&str>) -> Option<(&str, BTreeMap<String, u32>)> {
        let (qrels, qid) = (self.qrels.as_ref()?, query_id?);
        let gold = qrels.gold(qid)?;
        Some((gold, grades_or_gold(qrels, qid, gold)))
    }
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self { status: StatusCode::BAD_REQUEST, code: "BadRequest", message: message.into() }
    }
}

impl From<lirlab::Error> for ApiError {
    fn from(e: lirlab::Error) -> Self {
        let status = match e {
            lirlab::Error::UnknownDocId(_) | lirlab::Error::UnknownQueryId(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self { status, code: e.code(), message: e.to_string() }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;
type Body<T> = Result<Json<T>, JsonRejection>;

/// Runs CPU-bound work off the async executor.
async fn blocking<T: Send + 'static>(
    state: &Arc<AppState>,
    f: impl FnOnce(&AppState) -> Result<T, ApiError> + Send + 'static,
) -> ApiResult<T> {
    let state = Arc::clone(state);
    match tokio::task::spawn_blocking(move || f(&state)).await {
        Ok(r) => r.map(Json),
        Err(e) => Err(ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, code: "Internal", message: e.to_string() }),
    }
}

fn default_k() -> usize {
    EVAL_DEPTH
}

fn default_n() -> usize {
    MAX_SUGGESTIONS
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub query: String,
    #[serde(default = "default_k")]
    pub k: usize,
}

#[derive(Debug, Serialize)]
pub struct SearchHit {
    pub rank: usize,
    pub doc_id: String,
    pub score: f64,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SearchResponse {
    pub query: String,
    pub k: usize,
    pub results: Vec<SearchHit>,
}

fn run_search(s: &AppState, query: &str, k: usize) -> Result<SearchResponse, ApiError> {
    let result = s.lab.search_text(query, k)?;
    let results = result
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let doc = s.lab.doc(&e.doc_id)?;
            Ok(SearchHit {
                rank: i + 1,
                doc_id: e.doc_id.clone(),
                score: e.score,
                text: doc.text.clone(),
                title: doc.title.clone(),
            })
        })
        .collect::<Result<_, lirlab::Error>>()?;
    Ok(SearchResponse { query: query.to_string(), k, results })
}

async fn search(State(s): State<Arc<AppState>>, body: Body<SearchRequest>) -> ApiResult<SearchResponse> {
    let Json(req) = body?;
    blocking(&s, move |s| run_search(s, &req.query, req.k)).await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuggestRequest {
    pub query: String,
    pub method: String,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub query_id: Option<String>,
}

async fn suggest_handler(State(s): State<Arc<AppState>>, body: Body<SuggestRequest>) -> ApiResult<SuggestionSet> {
    let Json(req) = body?;
    let method: SuggestionMethod = req.method.parse()?;
    blocking(&s, move |s| {
        let qid = req.query_id.as_deref().or_else(|| s.query_id_for(&req.query)).unwrap_or("query");
        let query = Query::new(qid, req.query.clone());
        let cfg = SuggestConfig::default().reseeded(query_seed(s.seed, &query.text));
        let mut set = suggest(&s.lab, method, &query, &cfg, req.n)?;
        if let Some((gold, grades)) = s.gold_for(Some(qid)) {
            set.annotate(&s.lab, &grades, gold)?;
        }
        Ok(set)
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraverseRequest {
    pub query: String,
    pub doc_id: String,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

#[derive(Debug, Serialize)]
pub struct TraverseStepView {
    pub kappa: usize,
    pub text: String,
    pub reencode_similarity: f64,
    pub ndcg: f64,
    pub ip_with_gold: f64,
    pub gold_rank: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct ProjectedDoc {
    pub doc_id: String,
    pub xy: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct Projection {
    /// κ = 0..=k, starting at the query.
    pub path: Vec<[f64; 2]>,
    pub results: Vec<ProjectedDoc>,
    pub gold: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct TraverseResponse {
    pub query: String,
    pub doc_id: String,
    pub steps: Vec<TraverseStepView>,
    pub projection: Projection,
}

fn run_traverse(s: &AppState, req: &TraverseRequest) -> Result<TraverseResponse, ApiError> {
    let qid = s.query_id_for(&req.query);
    let grades = match s.gold_for(qid) {
        Some((gold, grades)) if gold == req.doc_id => grades,
        _ => BTreeMap::from([(req.doc_id.clone(), 1)]),
    };
    let (path, steps) = traverse_with_grades(&s.lab, s.lab.decoder(), &req.query, &req.doc_id, req.steps, &grades)?;
    let top = s.lab.search(&path.q, EVAL_DEPTH)?;
    let top_embs: Vec<Embedding> = top.doc_ids().map(|id| s.lab.doc_embedding(id)).collect::<Result<_, _>>()?;
    let mut points: Vec<&Embedding> = path.points.iter().collect();
    points.extend(&top_embs);
    points.push(&path.d);
    let xy = pca_2d(&points)?;
    let n_path = path.points.len();
    Ok(TraverseResponse {
        query: req.query.clone(),
        doc_id: req.doc_id.clone(),
        steps: steps
            .into_iter()
            .map(|st| TraverseStepView {
                kappa: st.kappa,
                text: st.decoding.text,
                reencode_similarity: st.decoding.reencode_similarity,
                ndcg: st.ndcg,
                ip_with_gold: st.ip_with_gold,
                gold_rank: st.gold_rank,
            })
            .collect(),
        projection: Projection {
            path: xy[..n_path].to_vec(),
            results: top
                .doc_ids()
                .zip(&xy[n_path..n_path + top_embs.len()])
                .map(|(id, &xy)| ProjectedDoc { doc_id: id.to_string(), xy })
                .collect(),
            gold: xy[xy.len() - 1],
        },
    })
}

async fn traverse(State(s): State<Arc<AppState>>, body: Body<TraverseRequest>) -> ApiResult<TraverseResponse> {
    let Json(req) = body?;
    blocking(&s, move |s| run_traverse(s, &req)).await
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeRequest {
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub doc_id: Option<String>,
}

async fn decode(State(s): State<Arc<AppState>>, body: Body<DecodeRequest>) -> ApiResult<Decoding> {
    let Json(req) = body?;
    blocking(&s, move |s| {
        let z = match (req.text, req.doc_id) {
            (Some(t), None) => s.lab.encode(&t)?,
            (None, Some(id)) => s.lab.doc_embedding(&id)?,
            _ => return Err(ApiError::bad_request("exactly one of \"text\" or \"doc_id\" is required")),
        };
        Ok(s.lab.decoder().decode_greedy_beam(&z)?)
    })
    .await
}

async fn doc(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Document> {
    Ok(Json(s.lab.doc(&id)?.clone()))
}

fn unknown_session(id: &str) -> ApiError {
    ApiError { status: StatusCode::NOT_FOUND, code: "UnknownSession", message: format!("unknown session {id:?}") }
}

async fn new_session(State(s): State<Arc<AppState>>) -> Json<SessionState> {
    let mut sessions = s.sessions.lock().expect("session table poisoned");
    sessions.next_id += 1;
    let state = SessionState { session_id: format!("s{}", sessions.next_id), history: Vec::new() };
    sessions.table.insert(state.session_id.clone(), state.clone());
    Json(state)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRequest {
    /// The query typed by the user; ignored when a suggestion was chosen.
    #[serde(default)]
    pub query: Option<String>,
    #[serde(default)]
    pub chosen_suggestion: Option<String>,
    #[serde(default = "default_k")]
    pub k: usize,
}

async fn session_step(
    State(s): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Body<StepRequest>,
) -> ApiResult<SessionState> {
    let Json(req) = body?;
    if !s.sessions.lock().expect("session table poisoned").table.contains_key(&id) {
        return Err(unknown_session(&id));
    }
    let Some(query) = req.chosen_suggestion.clone().or(req.query) else {
        return Err(ApiError::bad_request("one of \"query\" or \"chosen_suggestion\" is required"));
    };
    let Json(found) = blocking(&s, move |s| run_search(s, &query, req.k)).await?;
    let step = SessionStep {
        query: found.query,
        chosen_suggestion: req.chosen_suggestion,
        results: found.results.into_iter().map(|h| ResultSummary { doc_id: h.doc_id, score: h.score }).collect(),
    };
    let mut sessions = s.sessions.lock().expect("session table poisoned");
    let state = sessions.table.get_mut(&id).ok_or_else(|| unknown_session(&id))?;
    state.history.push(step);
    Ok(Json(state.clone()))
}

async fn get_session(State(s): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<SessionState> {
    let sessions = s.sessions.lock().expect("session table poisoned");
    sessions.table.get(&id).cloned().map(Json).ok_or_else(|| unknown_session(&id))
}

async fn info(State(s): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({
        "docs": s.lab.index().len(),
        "dim": s.lab.index().dim(),
        "qrels_loaded": s.qrels.is_some(),
        "queries": s.queries.len(),
        "methods": SuggestionMethod::ALL,
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/info", get(info))
        .route("/search", post(search))
        .route("/suggest", post(suggest_handler))
        .route("/traverse", post(traverse))
        .route("/decode", post(decode))
        .route("/doc/{id}", get(doc))
        .route("/session", post(new_session))
        .route("/session/{id}", get(get_session))
        .route("/session/{id}/step", post(session_step))
        .with_state(state)
}

pub fn serve(a: ServeArgs, seed: u64) -> anyhow::Result<()> {
    let lab = a.lab.load()?;
    let qrels = a.qrels.as_deref().map(read_qrels).transpose()?;
    let queries = a.queries.as_deref().map(read_queries).transpose()?.unwrap_or_default();
    let mut app = router(Arc::new(AppState::new(lab, qrels, queries, seed)));
    if let Some(dir) = &a.ui_dir {
        app = app.fallback_service(tower_http::services::ServeDir::new(dir));
    }
    let addr: SocketAddr = format!("{}:{}", a.host, a.port).parse().context("invalid --host/--port")?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await?;
        Ok(())
    })
}
