//! HTTP session service, versioned under `/v1`.
//!
//! | method | path | body / result |
//! |---|---|---|
//! | GET | `/v1/health` | `{version}` |
//! | GET | `/v1/scenes` | `{scenes: [id]}` |
//! | GET | `/v1/scenes/{id}` | scene document |
//! | GET | `/v1/scenes/{id}/render` | PNG |
//! | POST | `/v1/sessions` | [`CreateSession`] → `{session_id, snapshot}` |
//! | GET | `/v1/sessions/{id}` | snapshot |
//! | DELETE | `/v1/sessions/{id}` | 204 |
//! | POST | `/v1/sessions/{id}/gaze` | [`GazeRequest`] → [`TurnResponse`] |
//! | POST | `/v1/sessions/{id}/command` | [`CommandRequest`] → [`TurnResponse`] |
//! | GET | `/v1/sessions/{id}/mask` | [`MaskResponse`] |
//! | GET | `/v1/sessions/{id}/mask.png` | scene PNG with the mask overlaid |
//! | GET | `/v1/sessions/{id}/log` | session log, JSON lines |
//! | GET | `/v1/sessions/{id}/events` | server-sent `turn` events |
//!
//! Errors are JSON objects with an `error` kind and a `message`.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use gazeref_core::dialog::DialogTurn;
use gazeref_core::gaze::GazePoint;
use gazeref_core::geometry::{BBox, Mask};
use gazeref_core::scene::{Scene, SceneSpec};
use gazeref_core::session::{log_to_jsonl, Session, SessionError, SessionSnapshot};
use gazeref_core::sim::{fixation_stream, generate_scene, GazeNoiseModel, GeneratorConfig, SimScene, TrialCondition};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::broadcast;

use crate::config::ServiceConfig;
use crate::render::scene_png;

pub const API_VERSION: &str = "v1";

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: Value,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "error": kind, "message": message.into() }) }
    }

    fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} {id:?}"))
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::RoundLimit { .. } | SessionError::NoSelection => StatusCode::CONFLICT,
            SessionError::NoGazeData => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::Backend { unavailable: true, .. } => StatusCode::SERVICE_UNAVAILABLE,
            SessionError::Backend { .. } => StatusCode::BAD_GATEWAY,
            SessionError::Invalid(_) => StatusCode::BAD_REQUEST,
        };
        let mut body = serde_json::to_value(&e).expect("session errors serialize");
        body["message"] = Value::String(e.to_string());
        ApiError { status, body }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Slot {
    session: Session,
    /// Log records already appended to the session's file.
    written: usize,
    clicks: u64,
}

struct SessionEntry {
    slot: Mutex<Slot>,
    events: broadcast::Sender<DialogTurn>,
    log_path: Option<PathBuf>,
}

pub struct AppState {
    config: ServiceConfig,
    sessions: Mutex<BTreeMap<String, Arc<SessionEntry>>>,
    uploaded: Mutex<BTreeMap<String, SceneSpec>>,
    next_session: AtomicU64,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(AppState { config, sessions: Mutex::default(), uploaded: Mutex::default(), next_session: AtomicU64::new(1) })
    }

    fn entry(&self, id: &str) -> ApiResult<Arc<SessionEntry>> {
        self.sessions.lock().expect("session map").get(id).cloned().ok_or_else(|| ApiError::not_found("session", id))
    }

    fn scene_spec(&self, id: &str) -> ApiResult<SceneSpec> {
        if let Some(s) = self.uploaded.lock().expect("scene map").get(id) {
            return Ok(s.clone());
        }
        if let Some(dir) = &self.config.scene_dir {
            let path = dir.join(format!("{id}.json"));
            if path.is_file() {
                let text = std::fs::read_to_string(&path).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io", e.to_string()))?;
                return read_scene_document(&text).map_err(ApiError::bad_request);
            }
        }
        if let Some((condition, seed)) = parse_sim_id(id) {
            return generate_scene(condition, seed, &GeneratorConfig::default())
                .map(|s| s.scene)
                .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "scene", e.to_string()));
        }
        Err(ApiError::not_found("scene", id))
    }

    fn scene_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.uploaded.lock().expect("scene map").keys().cloned().collect();
        if let Some(dir) = &self.config.scene_dir {
            if let Ok(rd) = std::fs::read_dir(dir) {
                let mut files: Vec<String> = rd
                    .filter_map(|e| e.ok())
                    .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".json")).map(String::from))
                    .collect();
                files.sort();
                ids.extend(files);
            }
        }
        ids.extend(TrialCondition::all().iter().map(|c| format!("sim-{}-0", c.label())));
        ids.dedup();
        ids
    }
}

/// Accepts a bare scene or a generated scene document.
pub fn read_scene_document(text: &str) -> Result<SceneSpec, String> {
    if let Ok(doc) = serde_json::from_str::<SimScene>(text) {
        return Ok(doc.scene);
    }
    serde_json::from_str::<SceneSpec>(text).map_err(|e| format!("not a scene document: {e}"))
}

/// `sim-C<n>-<seed>` names a generated scene.
fn parse_sim_id(id: &str) -> Option<(TrialCondition, u64)> {
    let rest = id.strip_prefix("sim-")?;
    let (label, seed) = rest.split_once('-')?;
    Some((TrialCondition::from_label(label)?, seed.parse().ok()?))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/scenes", get(list_scenes))
        .route("/v1/scenes/{id}", get(get_scene))
        .route("/v1/scenes/{id}/render", get(render_scene))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(snapshot).delete(delete_session))
        .route("/v1/sessions/{id}/gaze", post(gaze))
        .route("/v1/sessions/{id}/command", post(command))
        .route("/v1/sessions/{id}/mask", get(mask))
        .route("/v1/sessions/{id}/mask.png", get(mask_png))
        .route("/v1/sessions/{id}/log", get(log))
        .route("/v1/sessions/{id}/events", get(events))
        .with_state(state)
}

async fn health() -> Json<Value> {
    Json(json!({ "version": API_VERSION }))
}

async fn list_scenes(State(app): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "scenes": app.scene_ids() }))
}

async fn get_scene(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SceneSpec>> {
    Ok(Json(app.scene_spec(&id)?))
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn render_scene(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let spec = app.scene_spec(&id)?;
    let bytes = blocking(move || {
        let scene = Scene::build(spec).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "scene", e.to_string()))?;
        Ok(scene_png(&scene, None))
    })
    .await?;
    Ok(png(bytes))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CreateSession {
    pub scene_id: Option<String>,
    /// Uploaded scene; registered under its own id.
    pub scene: Option<SceneSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub snapshot: SessionSnapshot,
}

async fn create_session(State(app): State<Arc<AppState>>, Json(req): Json<CreateSession>) -> ApiResult<(StatusCode, Json<CreatedSession>)> {
    let spec = match (req.scene, req.scene_id) {
        (Some(spec), _) => {
            app.uploaded.lock().expect("scene map").insert(spec.id.clone(), spec.clone());
            spec
        }
        (None, Some(id)) => app.scene_spec(&id)?,
        (None, None) => return Err(ApiError::bad_request("give scene_id or scene")),
    };
    if app.sessions.lock().expect("session map").len() >= app.config.max_sessions {
        return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "session_limit", format!("at most {} sessions", app.config.max_sessions)));
    }
    let state = app.clone();
    blocking(move || {
        let scene = Arc::new(Scene::build(spec).map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "scene", e.to_string()))?);
        let session = Session::open(scene, state.config.pipeline, state.config.backend.clone())?;
        let id = format!("s{}", state.next_session.fetch_add(1, Ordering::Relaxed));
        let log_path = state.config.log_dir.as_ref().map(|d| d.join(format!("{id}.jsonl")));
        let snapshot = session.snapshot();
        let entry = Arc::new(SessionEntry { slot: Mutex::new(Slot { session, written: 0, clicks: 0 }), events: broadcast::channel(64).0, log_path });
        {
            let slot = &mut *entry.slot.lock().expect("slot");
            persist(&entry, slot)?;
        }
        let mut map = state.sessions.lock().expect("session map");
        if map.len() >= state.config.max_sessions {
            return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "session_limit", format!("at most {} sessions", state.config.max_sessions)));
        }
        map.insert(id.clone(), entry);
        Ok((StatusCode::CREATED, Json(CreatedSession { session_id: id, snapshot })))
    })
    .await
}

fn persist(entry: &SessionEntry, slot: &mut Slot) -> ApiResult<()> {
    let records = slot.session.log();
    if let Some(path) = &entry.log_path {
        if slot.written < records.len() {
            let io = |e: std::io::Error| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "log", e.to_string());
            let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
            f.write_all(log_to_jsonl(&records[slot.written..]).as_bytes()).map_err(io)?;
        }
    }
    slot.written = records.len();
    Ok(())
}

async fn snapshot(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionSnapshot>> {
    let entry = app.entry(&id)?;
    let snap = entry.slot.lock().expect("slot").session.snapshot();
    Ok(Json(snap))
}

async fn delete_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    app.sessions.lock().expect("session map").remove(&id).ok_or_else(|| ApiError::not_found("session", &id))?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClickPoint {
    pub x: f64,
    pub y: f64,
}

/// Noise for a click: a preset name or explicit parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseChoice {
    Preset(String),
    Model(GazeNoiseModel),
}

/// Either a recorded stream with its selection time, or a click that is
/// expanded into a fixation window around the point.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GazeRequest {
    pub stream: Option<Vec<GazePoint>>,
    pub select_time: Option<f64>,
    pub click: Option<ClickPoint>,
    pub noise: Option<NoiseChoice>,
    /// Noise seed; defaults to the session's click counter.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommandRequest {
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurnResponse {
    pub turns: Vec<DialogTurn>,
    pub rounds_used: u32,
    pub rounds_remaining: u32,
}

/// Runs one session operation under the session's lock, appends new log
/// records and publishes new turns.
async fn with_session(
    app: Arc<AppState>,
    id: String,
    op: impl FnOnce(&mut Slot) -> Result<Vec<DialogTurn>, ApiError> + Send + 'static,
) -> ApiResult<Json<TurnResponse>> {
    let entry = app.entry(&id)?;
    blocking(move || {
        let mut guard = entry.slot.lock().expect("slot");
        let slot = &mut *guard;
        let before = slot.session.history().len();
        let result = op(slot);
        for t in &slot.session.history()[before..] {
            // No subscribers is fine.
            let _ = entry.events.send(t.clone());
        }
        persist(&entry, slot)?;
        let turns = result?;
        let snap = slot.session.snapshot();
        Ok(Json(TurnResponse { turns, rounds_used: snap.state.rounds_used, rounds_remaining: snap.rounds_remaining }))
    })
    .await
}

async fn gaze(State(app): State<Arc<AppState>>, Path(id): Path<String>, Json(req): Json<GazeRequest>) -> ApiResult<Json<TurnResponse>> {
    let noise = match &req.noise {
        None => GazeNoiseModel::none(),
        Some(NoiseChoice::Preset(name)) => GazeNoiseModel::preset(name).ok_or_else(|| ApiError::bad_request(format!("unknown noise preset {name:?}")))?,
        Some(NoiseChoice::Model(m)) => *m,
    };
    noise.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    with_session(app, id, move |slot| match (req.stream, req.click) {
        (Some(stream), None) => {
            let t = req.select_time.ok_or_else(|| ApiError::bad_request("select_time is required with a stream"))?;
            Ok(slot.session.gaze_select(&stream, t)?)
        }
        (None, Some(p)) => {
            let sampler = slot.session.state().config.sampler;
            let seed = req.seed.unwrap_or(slot.clicks);
            slot.clicks += 1;
            let scene = slot.session.scene().clone();
            if !(p.x >= 0.0 && p.y >= 0.0 && p.x < scene.width() as f64 && p.y < scene.height() as f64) {
                return Err(ApiError::bad_request("click lies outside the scene"));
            }
            let stream = fixation_stream(&scene, (p.x, p.y), &noise.with_seed(seed), sampler.window_delta, sampler.sample_rate_hz)
                .map_err(|e| ApiError::bad_request(e.to_string()))?;
            Ok(slot.session.gaze_select(&stream, sampler.window_delta)?)
        }
        _ => Err(ApiError::bad_request("give exactly one of stream or click")),
    })
    .await
}

async fn command(State(app): State<Arc<AppState>>, Path(id): Path<String>, Json(req): Json<CommandRequest>) -> ApiResult<Json<TurnResponse>> {
    with_session(app, id, move |slot| Ok(slot.session.apply_command(&req.text)?)).await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskResponse {
    /// Run-length encoded selection, absent before the first selection.
    pub mask: Option<Mask>,
    pub bbox: Option<BBox>,
}

async fn mask(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<MaskResponse>> {
    let entry = app.entry(&id)?;
    let slot = entry.slot.lock().expect("slot");
    let mask = slot.session.state().current_mask.clone();
    let bbox = mask.as_ref().and_then(|m| m.tight_box().ok());
    Ok(Json(MaskResponse { mask, bbox }))
}

async fn mask_png(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = app.entry(&id)?;
    let (scene, mask) = {
        let slot = entry.slot.lock().expect("slot");
        (slot.session.scene().clone(), slot.session.state().current_mask.clone())
    };
    let bytes = blocking(move || Ok(scene_png(&scene, mask.as_ref()))).await?;
    Ok(png(bytes))
}

async fn log(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = app.entry(&id)?;
    let text = log_to_jsonl(entry.slot.lock().expect("slot").session.log());
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

async fn events(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let rx = app.entry(&id)?.events.subscribe();
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(turn) => {
                    let event = Event::default().event("turn").json_data(&turn).expect("turns serialize");
                    return Some((Ok(event), rx));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}
