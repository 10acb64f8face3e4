use std::collections::{HashMap, VecDeque};
use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::multipart::MultipartRejection;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Request, State};
use axum::handler::HandlerWithoutStateExt;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use duet_core::agents::{build_critic_prompt, Agents, FeatureEntry};
use duet_core::dataset::{load_csv_reader, write_csv_string, DatasetMeta, Rejection};
use duet_core::diagnosis::summarize;
use duet_core::expr::{render_expr, OperatorSet};
use duet_core::refine::{run, LoopConfig, RunError, UndoOutcome};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;

use crate::config::{BackendFactory, Settings};
use crate::error::ApiError;
use crate::session::{
    columns_view, write_snapshot, LogKind, ProposalView, Session, SessionData, SessionStore,
};

/// Upper bound on `/auto` rounds per request.
pub const MAX_AUTO_ITERATIONS: usize = 20;
pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";
pub const REPLAYED_HEADER: &str = "idempotent-replayed";
const IDEMPOTENCY_CAPACITY: usize = 4096;
const MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;

pub struct AppState {
    pub store: SessionStore,
    pub factory: BackendFactory,
    pub settings: Settings,
    pub ops: OperatorSet,
    idempotency: Mutex<IdempotencyCache>,
}

impl AppState {
    pub fn new(
        store: SessionStore,
        factory: BackendFactory,
        settings: Settings,
        ops: OperatorSet,
    ) -> Self {
        AppState {
            store,
            factory,
            settings,
            ops,
            idempotency: Mutex::new(IdempotencyCache::default()),
        }
    }

    fn agents(&self) -> Result<Agents, ApiError> {
        let backend = self
            .factory
            .build()
            .map_err(|e| ApiError::backend(e.to_string()))?;
        Ok(Agents::new(backend, self.settings.agents.clone()))
    }

    /// Re-creates sessions from a snapshot, binding each to a new backend.
    pub fn restore(&self, sessions: Vec<SessionData>) -> Result<usize, ApiError> {
        let n = sessions.len();
        for data in sessions {
            let agents = self.agents()?;
            self.store.insert(Session { data, agents });
        }
        Ok(n)
    }
}

#[derive(Clone)]
struct CachedResponse {
    status: StatusCode,
    content_type: Option<HeaderValue>,
    body: Bytes,
}

impl CachedResponse {
    fn to_response(&self) -> Response {
        let mut resp = Response::new(Body::from(self.body.clone()));
        *resp.status_mut() = self.status;
        if let Some(ct) = &self.content_type {
            resp.headers_mut().insert(header::CONTENT_TYPE, ct.clone());
        }
        resp.headers_mut()
            .insert(REPLAYED_HEADER, HeaderValue::from_static("true"));
        resp
    }
}

enum Slot {
    InFlight,
    Done(CachedResponse),
}

enum Begin {
    Fresh,
    InFlight,
    Replay(CachedResponse),
}

/// Responses to mutating requests, keyed by method, path and client token.
#[derive(Default)]
struct IdempotencyCache {
    entries: HashMap<String, Slot>,
    order: VecDeque<String>,
}

impl IdempotencyCache {
    fn begin(&mut self, scope: &str) -> Begin {
        match self.entries.get(scope) {
            Some(Slot::Done(r)) => return Begin::Replay(r.clone()),
            Some(Slot::InFlight) => return Begin::InFlight,
            None => {}
        }
        self.entries.insert(scope.to_string(), Slot::InFlight);
        self.order.push_back(scope.to_string());
        while self.order.len() > IDEMPOTENCY_CAPACITY {
            if let Some(old) = self.order.pop_front() {
                self.entries.remove(&old);
            }
        }
        Begin::Fresh
    }

    fn finish(&mut self, scope: &str, response: Option<CachedResponse>) {
        match response {
            Some(r) => {
                if let Some(slot) = self.entries.get_mut(scope) {
                    *slot = Slot::Done(r);
                }
            }
            None => {
                self.entries.remove(scope);
                self.order.retain(|s| s != scope);
            }
        }
    }
}

async fn idempotency(State(app): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    if matches!(*req.method(), Method::GET | Method::HEAD | Method::OPTIONS) {
        return next.run(req).await;
    }
    let Some(key) = req
        .headers()
        .get(IDEMPOTENCY_HEADER)
        .and_then(|v| v.to_str().ok())
    else {
        return next.run(req).await;
    };
    let scope = format!("{} {} {}", req.method(), req.uri().path(), key);
    match app.idempotency.lock().unwrap().begin(&scope) {
        Begin::Fresh => {}
        Begin::InFlight => {
            return ApiError::conflict("a request with this Idempotency-Key is still in progress")
                .into_response()
        }
        Begin::Replay(r) => return r.to_response(),
    }
    let (parts, body) = next.run(req).await.into_parts();
    let bytes = match axum::body::to_bytes(body, usize::MAX).await {
        Ok(b) => b,
        Err(e) => {
            app.idempotency.lock().unwrap().finish(&scope, None);
            return ApiError::internal(format!("response body: {e}")).into_response();
        }
    };
    // Server-side failures may succeed on retry, so they are not replayed.
    let cached = (!parts.status.is_server_error()).then(|| CachedResponse {
        status: parts.status,
        content_type: parts.headers.get(header::CONTENT_TYPE).cloned(),
        body: bytes.clone(),
    });
    app.idempotency.lock().unwrap().finish(&scope, cached);
    Response::from_parts(parts, Body::from(bytes))
}

fn unknown_session(id: &str) -> ApiError {
    ApiError::not_found(format!("no session `{id}`"))
}

/// Runs `f` on a blocking thread with exclusive access to the session.
/// A session already serving another mutation answers 409.
async fn with_session<T, F>(app: &Arc<AppState>, id: &str, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut Session, &AppState) -> Result<T, ApiError> + Send + 'static,
{
    let slot = app.store.get(id).ok_or_else(|| unknown_session(id))?;
    let mut guard = slot
        .try_lock_owned()
        .map_err(|_| ApiError::conflict("session is busy with another request"))?;
    let app = app.clone();
    tokio::task::spawn_blocking(move || {
        let result = f(&mut guard, &app);
        guard.agents.take_transcript();
        result
    })
    .await
    .map_err(|e| ApiError::internal(format!("request handler failed: {e}")))?
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    body.map(|Json(v)| v)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    multipart: Result<Multipart, MultipartRejection>,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let mut multipart = multipart.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let (mut data, mut meta) = (None, None);
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ApiError::bad_request(e.body_text()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field
            .bytes()
            .await
            .map_err(|e| ApiError::bad_request(e.body_text()))?;
        match name.as_str() {
            "data" | "csv" => data = Some(bytes),
            "meta" => meta = Some(bytes),
            _ => {}
        }
    }
    let data = data.ok_or_else(|| ApiError::bad_request("missing multipart field `data`"))?;
    let meta = meta.ok_or_else(|| ApiError::bad_request("missing multipart field `meta`"))?;
    let meta: DatasetMeta = serde_json::from_slice(&meta)
        .map_err(|e| ApiError::bad_request(format!("invalid meta: {e}")))?;
    let (table, labels, meta) =
        load_csv_reader(&data[..], &meta).map_err(|e| ApiError::bad_request(e.to_string()))?;

    let agents = app.agents()?;
    let session = Session {
        data: SessionData::new(meta, table, labels),
        agents,
    };
    let body = json!({
        "session_id": session.data.id,
        "columns": columns_view(session.data.table(), &session.data.meta),
        "stats": summarize(session.data.table()),
    });
    app.store.insert(session);
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let slot = app.store.get(&id).ok_or_else(|| unknown_session(&id))?;
    let session = slot.lock().await;
    let snapshot = session.data.snapshot(session.agents.backend_name());
    Ok(Json(
        serde_json::to_value(snapshot).expect("snapshot serializes"),
    ))
}

async fn diagnose(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    with_session(&app, &id, |s, _| {
        let table = s.data.table();
        let prompt = build_critic_prompt(
            &s.data.meta,
            &summarize(table),
            &FeatureEntry::from_table(table),
        );
        let advice = s.agents.critique(&prompt)?;
        s.data.log(
            LogKind::Advice,
            advice.items().collect::<Vec<_>>().join("\n"),
            Vec::new(),
        );
        s.data.advice = Some(advice.clone());
        Ok(Json(json!({ "advice": advice })))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct InstructBody {
    text: String,
}

async fn instruct(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<InstructBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let text = json_body(body)?.text;
    with_session(&app, &id, move |s, app| {
        let cfg = &app.settings.refine;
        let data = &mut s.data;
        let proposal = data.conversation.instruct(
            &text,
            &data.meta,
            &app.ops,
            cfg.k_max,
            &cfg.policy(),
            &mut s.agents,
        )?;
        let view = ProposalView::from(proposal);
        data.log(LogKind::Instruction, text.trim(), Vec::new());
        data.log(LogKind::Proposal, "", view.exprs.clone());
        Ok(Json(json!({ "proposal": view })))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct AcceptBody {
    indices: Vec<usize>,
}

async fn accept(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<AcceptBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let indices = json_body(body)?.indices;
    with_session(&app, &id, move |s, app| {
        let data = &mut s.data;
        let outcome = data
            .conversation
            .accept(&indices, &app.settings.refine.policy())?;
        let accepted: Vec<String> = outcome.accepted.iter().map(render_expr).collect();
        let text = if accepted.is_empty() {
            "accepted nothing"
        } else {
            "accepted"
        };
        data.log(LogKind::Accepted, text, accepted.clone());
        Ok(Json(json!({
            "accepted": accepted,
            "rejections": outcome.rejections,
            "columns": columns_view(data.table(), &data.meta),
        })))
    })
    .await
}

async fn undo(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    with_session(&app, &id, |s, _| {
        let data = &mut s.data;
        let outcome = data.conversation.undo()?;
        let text = match outcome {
            UndoOutcome::DiscardedProposal => "discarded the pending proposal",
            UndoOutcome::RevertedTable => "reverted the last change",
        };
        data.log(LogKind::Undo, text, Vec::new());
        Ok(Json(json!({
            "outcome": outcome,
            "columns": columns_view(data.table(), &data.meta),
        })))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct AutoBody {
    iterations: usize,
}

#[derive(Debug, Serialize)]
struct AutoRound {
    index: usize,
    advice: Vec<String>,
    proposed: Option<String>,
    accepted: Vec<String>,
    rejections: Vec<Rejection>,
    skipped: Option<String>,
}

async fn auto(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<AutoBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let iterations = json_body(body)?.iterations;
    if !(1..=MAX_AUTO_ITERATIONS).contains(&iterations) {
        return Err(ApiError::bad_request(format!(
            "iterations must be between 1 and {MAX_AUTO_ITERATIONS}"
        )));
    }
    with_session(&app, &id, move |s, app| {
        let data = &mut s.data;
        if data.conversation.pending().is_some() {
            return Err(ApiError::conflict(
                "a proposal is pending; accept or undo it first",
            ));
        }
        let cfg = LoopConfig {
            iterations,
            ..app.settings.refine.clone()
        };
        let result = match run(data.table(), &data.meta, &app.ops, &cfg, &mut s.agents) {
            Ok(r) => r,
            Err(RunError::Config(e)) => return Err(ApiError::bad_request(e.to_string())),
            Err(RunError::Backend { round, error, .. }) => {
                return Err(ApiError::backend(format!(
                    "round {round}: {error}; no changes applied"
                )))
            }
        };
        let rounds: Vec<AutoRound> = result
            .iterations
            .iter()
            .map(|r| AutoRound {
                index: r.index,
                advice: r
                    .advice
                    .as_ref()
                    .map(|a| a.items().map(str::to_string).collect())
                    .unwrap_or_default(),
                proposed: r.proposed.as_ref().map(ToString::to_string),
                accepted: r.accepted.iter().map(render_expr).collect(),
                rejections: r.rejections.clone(),
                skipped: r.skipped.clone(),
            })
            .collect();
        for r in &rounds {
            data.log(
                LogKind::Auto,
                format!("round {}: {}", r.index, r.advice.join("; ")),
                r.accepted.clone(),
            );
        }
        if let Some(last) = result
            .iterations
            .iter()
            .rev()
            .find_map(|r| r.advice.clone())
        {
            data.advice = Some(last);
        }
        if result.table.n_cols() != data.table().n_cols() {
            data.conversation.replace_table(result.table);
        }
        Ok(Json(json!({
            "rounds": rounds,
            "columns": columns_view(data.table(), &data.meta),
        })))
    })
    .await
}

async fn export(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let slot = app.store.get(&id).ok_or_else(|| unknown_session(&id))?;
    let session = slot.lock().await;
    let data = &session.data;
    let csv = write_csv_string(data.table(), Some((&data.meta.target_name, &data.labels)))
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8"),
            (
                header::CONTENT_DISPOSITION,
                "attachment; filename=\"transformed.csv\"",
            ),
        ],
        csv,
    )
        .into_response())
}

async fn delete_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    if app.store.remove(&id) {
        Ok(Json(json!({ "deleted": id })))
    } else {
        Err(unknown_session(&id))
    }
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such route")
}

async fn method_not_allowed() -> Response {
    let mut resp = ApiError::bad_request("method not allowed for this route").into_response();
    *resp.status_mut() = StatusCode::METHOD_NOT_ALLOWED;
    resp
}

/// The session API, optionally serving the web UI's static files from
/// `static_dir` for every path the API does not claim.
pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/diagnose", post(diagnose))
        .route("/sessions/{id}/instruct", post(instruct))
        .route("/sessions/{id}/accept", post(accept))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/auto", post(auto))
        .route("/sessions/{id}/export", get(export))
        .method_not_allowed_fallback(method_not_allowed);
    let api = match static_dir {
        Some(dir) => api.fallback_service(
            ServeDir::new(dir)
                .append_index_html_on_directories(true)
                .not_found_service(not_found.into_service()),
        ),
        None => api.fallback(not_found),
    };
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods(Any)
        .allow_headers(Any)
        .expose_headers([header::CONTENT_DISPOSITION]);
    api.layer(middleware::from_fn_with_state(state.clone(), idempotency))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .layer(cors)
        .with_state(state)
}

/// Serves until `shutdown` resolves, sweeping idle sessions once a minute,
/// then writes every remaining session to `snapshot` when given.
pub async fn serve(
    listener: TcpListener,
    state: Arc<AppState>,
    static_dir: Option<PathBuf>,
    snapshot: Option<PathBuf>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let sweeper = {
        let state = state.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(Duration::from_secs(60));
            loop {
                tick.tick().await;
                state.store.sweep();
            }
        })
    };
    axum::serve(listener, router(state.clone(), static_dir))
        .with_graceful_shutdown(shutdown)
        .await?;
    sweeper.abort();
    if let Some(path) = snapshot {
        let n = write_snapshot(&state.store, &path).await?;
        eprintln!("saved {n} session(s) to {}", path.display());
    }
    Ok(())
}
