//! HTTP session service.
//!
//! Sessions live in memory. Each has a single writer: a command arriving
//! while another is executing on the same session gets 409, never a queue
//! slot. Rounds run on the blocking pool so rendering does not stall the
//! reactor.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use drivesim_core::assets::AssetBank;
use drivesim_core::dsl::wire::schema_document;
use drivesim_core::dsl::DslError;
use drivesim_core::export::export_scene;
use drivesim_core::image::RgbImage;
use drivesim_core::orchestrator::{AgentRole, OrchestratorError, RoundResult, Session, TraceEvent};
use drivesim_core::render::FrameRenderer;
use drivesim_core::scene::{EditConfig, Violation};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use tokio::sync::Mutex;

use crate::artifacts::SKYDOME_FILE;
use crate::backend::{BackendKind, InterpreterBackend};
use crate::formats;
use crate::scene_file::{load_scene, DEMO_SCENE};

pub const API_VERSION: &str = "1";
pub const PORT_ENV: &str = "DRIVESIM_PORT";
pub const ASSET_BANK_ENV: &str = "DRIVESIM_ASSET_BANK";
pub const DEFAULT_PORT: u16 = 8080;

pub type SharedRenderer = Arc<dyn FrameRenderer + Send + Sync>;

pub struct ServerConfig {
    pub bank: AssetBank,
    pub renderer: SharedRenderer,
}

/// Per-session data guarded by the session's writer lock.
struct Slot {
    session: Session,
    frames: Vec<RgbImage>,
    last_round: Option<RoundSummary>,
}

struct Entry {
    created_at: u64,
    slot: Arc<Mutex<Slot>>,
}

pub struct AppState {
    config: ServerConfig,
    sessions: RwLock<HashMap<String, Arc<Entry>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: ServerConfig) -> Arc<Self> {
        Arc::new(AppState { config, sessions: RwLock::new(HashMap::new()), next_id: AtomicU64::new(1) })
    }

    fn entry(&self, id: &str) -> Result<Arc<Entry>, ApiError> {
        self.sessions.read().expect("session map").get(id).cloned().ok_or_else(|| ApiError::unknown(id))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: u32,
    pub configs: usize,
    pub frames: usize,
    pub warnings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionHandle {
    pub id: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub last_round: Option<RoundSummary>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct CreateSession {
    /// `demo` or a scene file path readable by the server.
    #[serde(default = "demo_ref")]
    pub scene: String,
    #[serde(default)]
    pub seed: u64,
}

fn demo_ref() -> String {
    DEMO_SCENE.to_string()
}

#[derive(Clone, Debug, Deserialize)]
pub struct CommandRequest {
    pub text: String,
    #[serde(default)]
    pub backend: Option<InterpreterBackend>,
}

/// Body of a successful command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundResponse {
    pub session: String,
    pub round: u32,
    pub configs: Vec<EditConfig>,
    pub configs_by_role: BTreeMap<AgentRole, Vec<EditConfig>>,
    pub trace: Vec<TraceEvent>,
    pub warnings: Vec<String>,
    pub violations: Vec<Violation>,
    /// URLs of the rendered frames.
    pub frames: Vec<String>,
}

/// Error body: `{"error": {"code", "message", "detail"}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    detail: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl ToString) -> Self {
        ApiError { status, code, message: message.to_string(), detail: Value::Null }
    }

    fn unknown(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session '{id}'"))
    }

    fn unprocessable(code: &'static str, message: impl ToString) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    fn with_detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message, "detail": self.detail } });
        (self.status, Json(body)).into_response()
    }
}

fn dsl_detail(e: &DslError) -> Value {
    match e {
        DslError::UnknownClause { clause, nearest_rule } => json!({ "clause": clause, "nearest_rule": nearest_rule }),
        DslError::UnknownWord { word, clause, rule } => json!({ "word": word, "clause": clause, "nearest_rule": rule }),
        DslError::Incomplete { clause, rule, expected } => json!({ "clause": clause, "nearest_rule": rule, "expected": expected }),
        DslError::Ambiguous { what, first, second } => json!({ "attribute": what, "first": first, "second": second }),
        DslError::UnresolvedReference { expr, candidates } => json!({ "reference": expr, "candidates": candidates }),
        _ => Value::Null,
    }
}

impl From<OrchestratorError> for ApiError {
    fn from(e: OrchestratorError) -> Self {
        let message = e.to_string();
        match e {
            OrchestratorError::Parse(d) => ApiError::unprocessable("parse", message).with_detail(dsl_detail(&d)),
            OrchestratorError::UnsupportedAbstraction(p) => {
                ApiError::unprocessable("unsupported_abstraction", message).with_detail(json!({ "phrase": p }))
            }
            OrchestratorError::Cyclic => ApiError::unprocessable("plan", message),
            OrchestratorError::Role { role, index, config, .. } => ApiError::unprocessable("agent", message)
                .with_detail(json!({ "role": role, "config_index": index, "config": config })),
        }
    }
}

#[cfg(feature = "remote")]
impl From<crate::remote::RemoteError> for ApiError {
    fn from(e: crate::remote::RemoteError) -> Self {
        use crate::remote::RemoteError;
        let detail = match &e {
            RemoteError::Wire(w) => json!({ "offending_keys": w.offending_keys() }),
            _ => Value::Null,
        };
        let code = match &e {
            RemoteError::Wire(_) => "schema_violation",
            RemoteError::Backend(_) => "backend",
            _ => "interpreter_unavailable",
        };
        let status = match &e {
            RemoteError::Wire(_) | RemoteError::Backend(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_GATEWAY,
        };
        ApiError::new(status, code, e).with_detail(detail)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(session_handle).delete(delete_session))
        .route("/sessions/{id}/commands", post(command))
        .route("/sessions/{id}/scene", get(scene))
        .route("/sessions/{id}/frames/{n}", get(frame))
        .route("/sessions/{id}/export", get(export))
        .route("/schema/configs", get(config_schema))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(addr: SocketAddr, config: ServerConfig) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(config)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn handle(id: &str, entry: &Entry, slot: &Slot) -> SessionHandle {
    SessionHandle { id: id.to_string(), created_at: entry.created_at, last_round: slot.last_round.clone() }
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionHandle>), ApiError> {
    let scene_ref = req.scene.clone();
    let scene = tokio::task::spawn_blocking(move || load_scene(&scene_ref))
        .await
        .map_err(ApiError::internal)?
        .map_err(|e| ApiError::unprocessable("scene", e))?;
    let id = format!("s{}", app.next_id.fetch_add(1, Ordering::Relaxed));
    let session = Session::new(&id, scene, app.config.bank.clone(), req.seed);
    let entry = Arc::new(Entry {
        created_at: now(),
        slot: Arc::new(Mutex::new(Slot { session, frames: Vec::new(), last_round: None })),
    });
    app.sessions.write().expect("session map").insert(id.clone(), entry.clone());
    let h = SessionHandle { id, created_at: entry.created_at, last_round: None };
    Ok((StatusCode::CREATED, Json(h)))
}

async fn list_sessions(State(app): State<Arc<AppState>>) -> Json<Vec<String>> {
    let mut ids: Vec<String> = app.sessions.read().expect("session map").keys().cloned().collect();
    ids.sort();
    Json(ids)
}

async fn session_handle(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionHandle>, ApiError> {
    let entry = app.entry(&id)?;
    let slot = entry.slot.lock().await;
    Ok(Json(handle(&id, &entry, &slot)))
}

async fn delete_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    match app.sessions.write().expect("session map").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::unknown(&id)),
    }
}

async fn command(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<CommandRequest>,
) -> Result<Json<RoundResponse>, ApiError> {
    let entry = app.entry(&id)?;
    let mut slot = entry.slot.clone().try_lock_owned().map_err(|_| {
        ApiError::new(StatusCode::CONFLICT, "busy", format!("session '{id}' is already executing a command"))
    })?;
    let backend = req.backend.unwrap_or_default();
    backend.validate().map_err(|e| ApiError::unprocessable("backend", e))?;
    let remote_configs = match backend.kind {
        BackendKind::Grammar => None,
        BackendKind::RemoteModel => Some(remote_configs(&backend, &req.text, slot.session.round_counter).await?),
    };

    let app2 = app.clone();
    let text = req.text;
    let (slot, outcome) = tokio::task::spawn_blocking(move || {
        let renderer = app2.config.renderer.as_ref();
        // the session mutates only on success, so a failed round leaves it as it was
        let outcome = match remote_configs {
            Some(configs) => slot.session.apply_configs(configs, &text, renderer),
            None => slot.session.command(&text, renderer),
        };
        (slot, outcome)
    })
    .await
    .map_err(ApiError::internal)?;
    let mut slot = slot;
    let result: RoundResult = outcome?;
    let frames = (0..result.frames.len()).map(|n| format!("/sessions/{id}/frames/{n}")).collect();
    slot.last_round = Some(RoundSummary {
        round: result.round,
        configs: result.configs.len(),
        frames: result.frames.len(),
        warnings: result.warnings.len(),
    });
    slot.frames = result.frames;
    Ok(Json(RoundResponse {
        session: id,
        round: result.round,
        configs: result.configs,
        configs_by_role: result.configs_by_role,
        trace: result.trace,
        warnings: result.warnings,
        violations: result.violations,
        frames,
    }))
}

#[cfg(feature = "remote")]
async fn remote_configs(backend: &InterpreterBackend, text: &str, round: u32) -> Result<Vec<EditConfig>, ApiError> {
    let client = crate::remote::RemoteInterpreter::new(backend)?;
    Ok(client.interpret(text, round).await?)
}

#[cfg(not(feature = "remote"))]
async fn remote_configs(_: &InterpreterBackend, _: &str, _: u32) -> Result<Vec<EditConfig>, ApiError> {
    Err(ApiError::unprocessable("backend", crate::backend::BackendError::Unavailable))
}

async fn scene(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = app.entry(&id)?;
    let slot = entry.slot.lock().await;
    Ok(Json(&slot.session.state).into_response())
}

async fn frame(State(app): State<Arc<AppState>>, Path((id, n)): Path<(String, usize)>) -> Result<Response, ApiError> {
    let entry = app.entry(&id)?;
    let slot = entry.slot.lock().await;
    let img = slot.frames.get(n).ok_or_else(|| {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_frame", format!("session '{id}' has {} frames", slot.frames.len()))
    })?;
    let png = formats::encode_png(img).map_err(ApiError::internal)?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn export(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = app.entry(&id)?;
    let slot = entry.slot.lock().await;
    let s = &slot.session;
    let doc = export_scene(&s.state, &s.bank, s.state.skydome.as_ref().map(|_| SKYDOME_FILE));
    Ok(Json(doc).into_response())
}

async fn config_schema() -> Json<Value> {
    Json(schema_document())
}
