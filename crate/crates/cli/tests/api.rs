use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use gazeref::api::{router, AppState, CreatedSession, MaskResponse, TurnResponse};
use gazeref::config::ServiceConfig;
use gazeref_core::backend::BackendMode;
use gazeref_core::dialog::TurnKind;
use gazeref_core::session::{log_from_jsonl, replay, SessionSnapshot};
use gazeref_core::sim::{generate_scene, GeneratorConfig, TrialCondition};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(config: ServiceConfig) -> Router {
    router(AppState::new(config))
}

async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or(Body::empty(), |b| Body::from(b.to_string()))).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn json_of(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = send(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

/// Center of the target in the generated scene `sim-C<n>-<seed>`.
fn target_center(n: usize, seed: u64) -> (f64, f64) {
    let doc = generate_scene(TrialCondition::all()[n - 1], seed, &GeneratorConfig::default()).unwrap();
    let scene = doc.build().unwrap();
    scene.object(doc.target_id).unwrap().bbox.center()
}

async fn create(app: &Router, scene_id: &str) -> String {
    let (status, body) = json_of(app, "POST", "/v1/sessions", Some(json!({ "scene_id": scene_id }))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    let created: CreatedSession = serde_json::from_value(body).unwrap();
    assert_eq!(created.snapshot.version, "v1");
    created.session_id
}

#[tokio::test]
async fn click_selects_and_describes() {
    let app = app(ServiceConfig::default());
    let id = create(&app, "sim-C2-5").await;
    let (x, y) = target_center(2, 5);
    let (status, body) = json_of(&app, "POST", &format!("/v1/sessions/{id}/gaze"), Some(json!({ "click": { "x": x, "y": y } }))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let res: TurnResponse = serde_json::from_value(body).unwrap();
    let describe = res.turns.iter().find(|t| t.kind == TurnKind::Describe).unwrap();
    assert!(describe.text.as_deref().unwrap().starts_with("I've selected"));
    assert_eq!(res.rounds_remaining, 2);

    let (_, snap) = json_of(&app, "GET", &format!("/v1/sessions/{id}"), None).await;
    let snap: SessionSnapshot = serde_json::from_value(snap).unwrap();
    let (_, mask) = json_of(&app, "GET", &format!("/v1/sessions/{id}/mask"), None).await;
    let mask: MaskResponse = serde_json::from_value(mask).unwrap();
    assert_eq!(mask.mask, snap.state.current_mask);
    assert_eq!(mask.bbox, mask.mask.as_ref().map(|m| m.tight_box().unwrap()));
    let text = serde_json::to_string(&snap).unwrap();
    assert_eq!(serde_json::from_str::<SessionSnapshot>(&text).unwrap(), snap);
}

#[tokio::test]
async fn round_limit_is_structured() {
    let app = app(ServiceConfig::default());
    let id = create(&app, "sim-C1-0").await;
    let (x, y) = target_center(1, 0);
    json_of(&app, "POST", &format!("/v1/sessions/{id}/gaze"), Some(json!({ "click": { "x": x, "y": y } }))).await;
    for _ in 0..2 {
        let (status, _) = json_of(&app, "POST", &format!("/v1/sessions/{id}/command"), Some(json!({ "text": "the one on the left" }))).await;
        assert_eq!(status, StatusCode::OK);
    }
    let (status, body) = json_of(&app, "POST", &format!("/v1/sessions/{id}/command"), Some(json!({ "text": "the one on the right" }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "round_limit");
    assert_eq!(body["max_rounds"], 2);
    assert!(body["message"].is_string());
}

#[tokio::test]
async fn unknown_ids_are_not_found() {
    let app = app(ServiceConfig::default());
    for uri in ["/v1/sessions/s99", "/v1/sessions/s99/mask", "/v1/scenes/nope", "/v1/scenes/sim-C13-0"] {
        let (status, body) = json_of(&app, "GET", uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(body["error"], "not_found");
    }
    let (status, _) = json_of(&app, "POST", "/v1/sessions/s99/command", Some(json!({ "text": "the cup" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = json_of(&app, "POST", "/v1/sessions", Some(json!({ "scene_id": "nope" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn commands_before_gaze_conflict() {
    let app = app(ServiceConfig::default());
    let id = create(&app, "sim-C1-0").await;
    let (status, body) = json_of(&app, "POST", &format!("/v1/sessions/{id}/command"), Some(json!({ "text": "the cup" }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "no_selection");
}

#[tokio::test]
async fn unreachable_sidecar_is_503_with_stage() {
    let config = ServiceConfig {
        backend: BackendMode::Wire { endpoint: "http://127.0.0.1:9/".into(), timeout_ms: 300, fallback_to_oracle: false },
        ..ServiceConfig::default()
    };
    let app = app(config);
    let id = create(&app, "sim-C1-0").await;
    let (status, body) = json_of(&app, "POST", &format!("/v1/sessions/{id}/gaze"), Some(json!({ "click": { "x": 500.0, "y": 500.0 } }))).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE, "{body}");
    assert_eq!(body["error"], "backend");
    assert_eq!(body["stage"], "segment_point");
}

#[tokio::test]
async fn renders_are_png() {
    let app = app(ServiceConfig::default());
    let (status, bytes) = send(&app, "GET", "/v1/scenes/sim-C3-1/render", None).await;
    assert_eq!(status, StatusCode::OK);
    let plain = image::load_from_memory(&bytes).unwrap().to_rgb8();
    assert_eq!(plain.dimensions(), (1080, 1080));

    let id = create(&app, "sim-C3-1").await;
    let (x, y) = target_center(3, 1);
    json_of(&app, "POST", &format!("/v1/sessions/{id}/gaze"), Some(json!({ "click": { "x": x, "y": y } }))).await;
    let (status, bytes) = send(&app, "GET", &format!("/v1/sessions/{id}/mask.png"), None).await;
    assert_eq!(status, StatusCode::OK);
    let overlaid = image::load_from_memory(&bytes).unwrap().to_rgb8();
    assert_ne!(overlaid.get_pixel(x as u32, y as u32), plain.get_pixel(x as u32, y as u32));
}

#[tokio::test]
async fn scenes_are_listed_and_uploadable() {
    let app = app(ServiceConfig::default());
    let (_, list) = json_of(&app, "GET", "/v1/scenes", None).await;
    assert_eq!(list["scenes"].as_array().unwrap().len(), 12);
    let (_, mut spec) = json_of(&app, "GET", "/v1/scenes/sim-C4-2", None).await;
    spec["id"] = json!("mine");
    let (status, _) = json_of(&app, "POST", "/v1/sessions", Some(json!({ "scene": spec }))).await;
    assert_eq!(status, StatusCode::CREATED);
    let (_, list) = json_of(&app, "GET", "/v1/scenes", None).await;
    assert_eq!(list["scenes"][0], "mine");
}

#[tokio::test]
async fn logs_replay_and_land_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(ServiceConfig { log_dir: Some(dir.path().to_path_buf()), ..ServiceConfig::default() });
    let id = create(&app, "sim-C7-3").await;
    let (x, y) = target_center(7, 3);
    json_of(&app, "POST", &format!("/v1/sessions/{id}/gaze"), Some(json!({ "click": { "x": x, "y": y }, "noise": "calibrated" }))).await;
    json_of(&app, "POST", &format!("/v1/sessions/{id}/command"), Some(json!({ "text": "the one on the left" }))).await;
    let (_, bytes) = send(&app, "GET", &format!("/v1/sessions/{id}/log"), None).await;
    let text = String::from_utf8(bytes).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join(format!("{id}.jsonl"))).unwrap(), text);
    let log = log_from_jsonl(&text).unwrap();
    assert_eq!(replay(&log).unwrap(), log);
}

#[tokio::test]
async fn events_stream_new_turns() {
    let state = AppState::new(ServiceConfig::default());
    let app = router(Arc::clone(&state));
    let id = create(&app, "sim-C1-4").await;
    let req = Request::builder().uri(format!("/v1/sessions/{id}/events")).body(Body::empty()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    assert_eq!(res.headers()["content-type"], "text/event-stream");
    let mut body = res.into_body();
    let (x, y) = target_center(1, 4);
    json_of(&app, "POST", &format!("/v1/sessions/{id}/gaze"), Some(json!({ "click": { "x": x, "y": y } }))).await;
    let mut text = String::new();
    while !text.contains("I've selected") {
        let frame = tokio::time::timeout(Duration::from_secs(5), body.frame()).await.expect("event in time").unwrap().unwrap();
        if let Ok(data) = frame.into_data() {
            text.push_str(std::str::from_utf8(&data).unwrap());
        }
    }
    assert!(text.starts_with("event: turn\n"), "{text}");
}

#[tokio::test]
async fn bad_requests_are_rejected() {
    let app = app(ServiceConfig::default());
    let id = create(&app, "sim-C1-0").await;
    for body in [json!({}), json!({ "click": { "x": -1.0, "y": 3.0 } }), json!({ "click": { "x": 1.0, "y": 3.0 }, "noise": "loud" })] {
        let (status, res) = json_of(&app, "POST", &format!("/v1/sessions/{id}/gaze"), Some(body)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert_eq!(res["error"], "invalid_request");
    }
    let (status, _) = json_of(&app, "GET", "/v1/health", None).await;
    assert_eq!(status, StatusCode::OK);
}
