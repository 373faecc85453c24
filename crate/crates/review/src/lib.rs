//! Review service for projection corrections and adjudication.
//!
//! State lives in a data directory: read-only inputs (`projections.jsonl`,
//! `documents.jsonl`, `adjudication.jsonl`) and two append-only logs. The
//! logs are the source of truth; task statuses and document views are
//! rebuilt from them on start.

mod error;
mod store;
mod tasks;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use mmc_core::ingest::canonical_json;
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

pub use error::ApiError;
pub use store::{
    AdjudicationSet, CorrectionRequest, DecisionRecord, DecisionRequest, Store, ADJUDICATION, CORRECTION_LOG,
    DECISION_LOG, DOCUMENTS, PROJECTIONS,
};
pub use tasks::{ContextUtterance, ReviewTask, TaskKind, TaskPayload, TaskStatus};

pub type SharedStore = Arc<RwLock<Store>>;

const DEFAULT_PAGE_SIZE: usize = 50;
const MAX_PAGE_SIZE: usize = 500;

#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    /// Static files served under `/`.
    pub ui_dir: Option<PathBuf>,
    /// Allowed CORS origin; any origin when unset.
    pub cors_origin: Option<String>,
}

pub fn router(store: SharedStore, opts: &ServeOptions) -> Router {
    let cors = match opts.cors_origin.as_deref().and_then(|o| o.parse::<HeaderValue>().ok()) {
        Some(origin) => CorsLayer::new().allow_origin(origin),
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    let api = Router::new()
        .route("/api/health", get(|| async { "ok" }))
        .route("/api/docs/{id}", get(get_doc))
        .route("/api/merge/{id}", get(get_merge))
        .route("/api/tasks", get(list_tasks))
        .route("/api/tasks/{id}", get(get_task))
        .route("/api/corrections", post(post_correction))
        .route("/api/adjudications", post(post_decision))
        .with_state(store);
    let app = match &opts.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(cors)
}

/// Opens `data_dir` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, data_dir: PathBuf, opts: ServeOptions) -> Result<(), String> {
    let store = Store::open(data_dir)?;
    let app = router(Arc::new(RwLock::new(store)), &opts);
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| format!("bind {addr}: {e}"))?;
    axum::serve(listener, app).await.map_err(|e| e.to_string())
}

fn json_body(body: String, status: StatusCode) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn read(store: &SharedStore) -> Result<std::sync::RwLockReadGuard<'_, Store>, ApiError> {
    store.read().map_err(|_| ApiError::Internal("store lock poisoned".into()))
}

fn write(store: &SharedStore) -> Result<std::sync::RwLockWriteGuard<'_, Store>, ApiError> {
    store.write().map_err(|_| ApiError::Internal("store lock poisoned".into()))
}

/// Ids are restricted to `[A-Za-z0-9_.:-]` and may not contain `..`.
fn checked_id(id: &str) -> Result<&str, ApiError> {
    let ok = !id.is_empty()
        && id.len() <= 200
        && !id.contains("..")
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-' | ':'));
    if ok {
        Ok(id)
    } else {
        Err(ApiError::BadRequest(format!("invalid id {id:?}")))
    }
}

async fn get_doc(State(store): State<SharedStore>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id = checked_id(&id)?;
    let store = read(&store)?;
    let doc = store.document(id).ok_or_else(|| ApiError::NotFound(format!("unknown document {id}")))?;
    Ok(json_body(canonical_json(doc), StatusCode::OK))
}

async fn get_merge(State(store): State<SharedStore>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id = checked_id(&id)?;
    let store = read(&store)?;
    let state = store.merge_view(id).ok_or_else(|| ApiError::NotFound(format!("no adjudication set {id}")))?;
    Ok(json_body(canonical_json(state), StatusCode::OK))
}

async fn get_task(State(store): State<SharedStore>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let id = checked_id(&id)?;
    let store = read(&store)?;
    let task = store.task(id).ok_or_else(|| ApiError::NotFound(format!("unknown task {id}")))?;
    Ok(json_body(canonical_json(task), StatusCode::OK))
}

#[derive(Debug, Deserialize)]
struct TaskQuery {
    kind: Option<String>,
    doc: Option<String>,
    status: Option<String>,
    page_token: Option<String>,
    page_size: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct TaskPage {
    pub tasks: Vec<ReviewTask>,
    pub total: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_page_token: Option<String>,
}

fn encode_token(offset: usize) -> String {
    URL_SAFE_NO_PAD.encode(format!("offset:{offset}"))
}

fn decode_token(token: &str) -> Option<usize> {
    let raw = URL_SAFE_NO_PAD.decode(token).ok()?;
    String::from_utf8(raw).ok()?.strip_prefix("offset:")?.parse().ok()
}

async fn list_tasks(State(store): State<SharedStore>, Query(q): Query<TaskQuery>) -> Result<Response, ApiError> {
    let kind = q
        .kind
        .as_deref()
        .map(|k| TaskKind::parse(k).ok_or_else(|| ApiError::BadRequest(format!("invalid kind {k:?}"))))
        .transpose()?;
    let status = q
        .status
        .as_deref()
        .map(|s| TaskStatus::parse(s).ok_or_else(|| ApiError::BadRequest(format!("invalid status {s:?}"))))
        .transpose()?;
    let offset = match q.page_token.as_deref() {
        Some(t) => decode_token(t).ok_or_else(|| ApiError::BadRequest("invalid page token".into()))?,
        None => 0,
    };
    let size = q.page_size.unwrap_or(DEFAULT_PAGE_SIZE).clamp(1, MAX_PAGE_SIZE);

    let store = read(&store)?;
    let matching: Vec<&ReviewTask> = store
        .tasks()
        .iter()
        .filter(|t| kind.is_none_or(|k| t.kind == k))
        .filter(|t| status.is_none_or(|s| t.status == s))
        .filter(|t| q.doc.as_deref().is_none_or(|d| t.doc_id == d))
        .collect();
    if offset > matching.len() {
        return Err(ApiError::BadRequest("invalid page token".into()));
    }
    let end = (offset + size).min(matching.len());
    let page = TaskPage {
        tasks: matching[offset..end].iter().map(|t| (*t).clone()).collect(),
        total: matching.len(),
        next_page_token: (end < matching.len()).then(|| encode_token(end)),
    };
    Ok(json_body(canonical_json(&page), StatusCode::OK))
}

#[derive(Debug, Default, Deserialize)]
struct OverrideQuery {
    #[serde(default, rename = "override")]
    override_done: bool,
}

async fn post_correction(
    State(store): State<SharedStore>,
    Query(q): Query<OverrideQuery>,
    Json(mut req): Json<CorrectionRequest>,
) -> Result<Response, ApiError> {
    req.override_done |= q.override_done;
    let record = write(&store)?.submit_correction(req)?;
    Ok(json_body(canonical_json(&record), StatusCode::CREATED))
}

async fn post_decision(
    State(store): State<SharedStore>,
    Query(q): Query<OverrideQuery>,
    Json(mut req): Json<DecisionRequest>,
) -> Result<Response, ApiError> {
    req.override_done |= q.override_done;
    let record = write(&store)?.submit_decision(req)?;
    Ok(json_body(canonical_json(&record), StatusCode::CREATED))
}
