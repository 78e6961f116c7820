//! Capability-keyed request/response protocol for model sidecars.
//!
//! Request: `{"capability", "request_id", "payload"}`.
//! Response: `{"request_id", "ok", "payload"}` or `{"request_id", "ok": false, "error"}`.
//! Over HTTP each request is one POST; over stdio each is one line.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{BackendError, BoxSegmentation, Detection, ModelBackend, PatchScore, SegmentationResult};
use crate::describer::{ContextRegion, Description};
use crate::dialog::DialogTurn;
use crate::geometry::{BBox, Mask};
use crate::parser::{self, ObjectDescriptor, ParsedCommand};

pub const CAPABILITIES: [&str; 8] =
    ["segment_point", "segment_box", "segment_everything", "detect", "judge_noisy", "score_patch", "describe_free", "interpret_command"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub capability: String,
    pub request_id: String,
    #[serde(default)]
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub request_id: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Moves one encoded request to a sidecar and returns the raw reply.
pub trait Transport: Send + Sync {
    fn exchange(&self, capability: &str, request: &str, timeout: Duration) -> Result<String, BackendError>;
}

/// In-process transport, mostly for tests.
pub struct FnTransport<F>(pub F);

impl<F> Transport for FnTransport<F>
where
    F: Fn(&str) -> Result<String, BackendError> + Send + Sync,
{
    fn exchange(&self, _capability: &str, request: &str, _timeout: Duration) -> Result<String, BackendError> {
        (self.0)(request)
    }
}

pub struct HttpTransport {
    endpoint: String,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpTransport { endpoint: endpoint.into() }
    }
}

impl Transport for HttpTransport {
    fn exchange(&self, capability: &str, request: &str, timeout: Duration) -> Result<String, BackendError> {
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        let result = agent.post(&self.endpoint).header("content-type", "application/json").send(request);
        let mut response = result.map_err(|e| match e {
            ureq::Error::Timeout(_) => BackendError::Timeout { capability: capability.into(), millis: timeout.as_millis() as u64 },
            other => BackendError::Transport { capability: capability.into(), reason: other.to_string() },
        })?;
        let status = response.status();
        let body = response.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => BackendError::Timeout { capability: capability.into(), millis: timeout.as_millis() as u64 },
            other => BackendError::Transport { capability: capability.into(), reason: other.to_string() },
        })?;
        if !status.is_success() && body.trim().is_empty() {
            return Err(BackendError::Transport { capability: capability.into(), reason: format!("HTTP status {status}") });
        }
        Ok(body)
    }
}

struct StdioChild {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

/// Line-delimited exchange with a child process.
pub struct StdioTransport {
    inner: Mutex<StdioChild>,
}

impl StdioTransport {
    pub fn spawn(program: &str, args: &[String]) -> std::io::Result<Self> {
        let mut child = Command::new(program).args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::inherit()).spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(StdioTransport { inner: Mutex::new(StdioChild { child, stdin, lines }) })
    }
}

impl Drop for StdioTransport {
    fn drop(&mut self) {
        if let Ok(inner) = self.inner.get_mut() {
            let _ = inner.child.kill();
            let _ = inner.child.wait();
        }
    }
}

impl Transport for StdioTransport {
    fn exchange(&self, capability: &str, request: &str, timeout: Duration) -> Result<String, BackendError> {
        let transport = |reason: String| BackendError::Transport { capability: capability.into(), reason };
        let mut inner = self.inner.lock().map_err(|_| transport("sidecar lock poisoned".into()))?;
        writeln!(inner.stdin, "{request}").and_then(|_| inner.stdin.flush()).map_err(|e| transport(e.to_string()))?;
        match inner.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(transport(e.to_string())),
            Err(mpsc::RecvTimeoutError::Timeout) => Err(BackendError::Timeout { capability: capability.into(), millis: timeout.as_millis() as u64 }),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(transport("sidecar closed its output".into())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PointPayload {
    frame_id: String,
    point: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct BoxPayload {
    frame_id: String,
    #[serde(rename = "box")]
    bbox: BBox,
}

#[derive(Serialize, Deserialize)]
struct ScorePayload {
    frame_id: String,
    #[serde(rename = "box")]
    bbox: BBox,
    descriptor: ObjectDescriptor,
}

#[derive(Serialize, Deserialize)]
struct DescribePayload {
    frame_id: String,
    mask: Mask,
    context: ContextRegion,
}

#[derive(Serialize, Deserialize)]
struct InterpretPayload {
    utterance: String,
    #[serde(default)]
    history: Vec<DialogTurn>,
}

#[derive(Serialize, Deserialize)]
struct MasksPayload {
    masks: Vec<Mask>,
}

#[derive(Serialize, Deserialize)]
struct DetectionsPayload {
    detections: Vec<Detection>,
}

#[derive(Serialize, Deserialize)]
struct NoisyPayload {
    noisy: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum InterpretResult {
    Parsed { command: ParsedCommand },
    Rejected { rejected: String },
}

/// Client side of the protocol.
pub struct WireBackend {
    transport: Box<dyn Transport>,
    frame_id: String,
    timeout: Duration,
    next_id: AtomicU64,
    fallback: Option<Arc<dyn ModelBackend>>,
}

impl WireBackend {
    pub fn new(transport: Box<dyn Transport>, frame_id: impl Into<String>, timeout: Duration) -> Self {
        WireBackend { transport, frame_id: frame_id.into(), timeout, next_id: AtomicU64::new(1), fallback: None }
    }

    /// Answers from `fallback` whenever the sidecar is unreachable.
    pub fn with_fallback(mut self, fallback: Arc<dyn ModelBackend>) -> Self {
        self.fallback = Some(fallback);
        self
    }

    pub fn call(&self, capability: &str, payload: Value) -> Result<Value, BackendError> {
        let request_id = format!("{}-{}", self.frame_id, self.next_id.fetch_add(1, Ordering::Relaxed));
        let request = WireRequest { capability: capability.into(), request_id: request_id.clone(), payload };
        let line = serde_json::to_string(&request).expect("requests serialize");
        let raw = self.transport.exchange(capability, &line, self.timeout)?;
        let malformed = |reason: String| BackendError::Malformed { capability: capability.into(), reason };
        let response: WireResponse = serde_json::from_str(raw.trim()).map_err(|e| malformed(e.to_string()))?;
        if response.request_id != request_id {
            return Err(BackendError::Protocol {
                capability: capability.into(),
                reason: format!("response id {:?} does not match request {request_id:?}", response.request_id),
            });
        }
        if !response.ok {
            return Err(BackendError::Protocol { capability: capability.into(), reason: response.error.unwrap_or_else(|| "request refused".into()) });
        }
        response.payload.ok_or_else(|| malformed("missing payload".into()))
    }

    fn typed<T: DeserializeOwned>(&self, capability: &str, payload: Value) -> Result<T, BackendError> {
        let value = self.call(capability, payload)?;
        serde_json::from_value(value).map_err(|e| BackendError::Malformed { capability: capability.into(), reason: e.to_string() })
    }

    fn with_fallback_on<T>(
        &self,
        result: Result<T, BackendError>,
        fallback: impl FnOnce(&dyn ModelBackend) -> Result<T, BackendError>,
    ) -> Result<T, BackendError> {
        match (result, &self.fallback) {
            (Err(e), Some(f)) if e.is_unavailable() => fallback(f.as_ref()),
            (r, _) => r,
        }
    }
}

impl ModelBackend for WireBackend {
    fn segment_point(&self, point: (f64, f64)) -> Result<SegmentationResult, BackendError> {
        let r = self
            .typed::<SegmentationResult>("segment_point", json!(PointPayload { frame_id: self.frame_id.clone(), point: [point.0, point.1] }))
            .and_then(|r| {
                r.validate().map_err(|reason| BackendError::Malformed { capability: "segment_point".into(), reason })?;
                Ok(r)
            });
        self.with_fallback_on(r, |f| f.segment_point(point))
    }

    fn segment_box(&self, bbox: &BBox) -> Result<BoxSegmentation, BackendError> {
        let r = self.typed("segment_box", json!(BoxPayload { frame_id: self.frame_id.clone(), bbox: *bbox }));
        self.with_fallback_on(r, |f| f.segment_box(bbox))
    }

    fn segment_everything(&self) -> Result<Vec<Mask>, BackendError> {
        let r = self.typed::<MasksPayload>("segment_everything", json!({ "frame_id": self.frame_id })).map(|p| p.masks);
        self.with_fallback_on(r, |f| f.segment_everything())
    }

    fn detect(&self) -> Result<Vec<Detection>, BackendError> {
        let r = self.typed::<DetectionsPayload>("detect", json!({ "frame_id": self.frame_id })).map(|p| p.detections);
        self.with_fallback_on(r, |f| f.detect())
    }

    fn judge_noisy(&self, bbox: &BBox) -> Result<bool, BackendError> {
        let r = self.typed::<NoisyPayload>("judge_noisy", json!(BoxPayload { frame_id: self.frame_id.clone(), bbox: *bbox })).map(|p| p.noisy);
        self.with_fallback_on(r, |f| f.judge_noisy(bbox))
    }

    fn score_patch(&self, bbox: &BBox, descriptor: &ObjectDescriptor) -> Result<PatchScore, BackendError> {
        let payload = json!(ScorePayload { frame_id: self.frame_id.clone(), bbox: *bbox, descriptor: descriptor.clone() });
        let r = self.typed::<PatchScore>("score_patch", payload).and_then(|s| {
            if (0.0..=1.0).contains(&s.score) {
                Ok(s)
            } else {
                Err(BackendError::Malformed { capability: "score_patch".into(), reason: format!("score {} outside [0, 1]", s.score) })
            }
        });
        self.with_fallback_on(r, |f| f.score_patch(bbox, descriptor))
    }

    fn describe(&self, mask: &Mask, context: &ContextRegion) -> Result<Description, BackendError> {
        let payload = json!(DescribePayload { frame_id: self.frame_id.clone(), mask: mask.clone(), context: *context });
        let r = self.typed("describe_free", payload);
        self.with_fallback_on(r, |f| f.describe(mask, context))
    }

    fn interpret_command(&self, utterance: &str, history: &[DialogTurn]) -> Result<Result<ParsedCommand, parser::ParseError>, BackendError> {
        let payload = json!(InterpretPayload { utterance: utterance.into(), history: history.to_vec() });
        let r = self.typed::<InterpretResult>("interpret_command", payload).map(|r| match r {
            InterpretResult::Parsed { command } => Ok(command),
            InterpretResult::Rejected { rejected } => Err(parser::ParseError::Unparseable(rejected)),
        });
        self.with_fallback_on(r, |f| f.interpret_command(utterance, history))
    }
}

fn answer(backend: &dyn ModelBackend, capability: &str, payload: Value) -> Result<Value, String> {
    fn arg<T: DeserializeOwned>(payload: Value) -> Result<T, String> {
        serde_json::from_value(payload).map_err(|e| format!("bad payload: {e}"))
    }
    let err = |e: BackendError| e.to_string();
    let out = match capability {
        "segment_point" => {
            let p: PointPayload = arg(payload)?;
            json!(backend.segment_point((p.point[0], p.point[1])).map_err(err)?)
        }
        "segment_box" => {
            let p: BoxPayload = arg(payload)?;
            json!(backend.segment_box(&p.bbox).map_err(err)?)
        }
        "segment_everything" => json!(MasksPayload { masks: backend.segment_everything().map_err(err)? }),
        "detect" => json!(DetectionsPayload { detections: backend.detect().map_err(err)? }),
        "judge_noisy" => {
            let p: BoxPayload = arg(payload)?;
            json!(NoisyPayload { noisy: backend.judge_noisy(&p.bbox).map_err(err)? })
        }
        "score_patch" => {
            let p: ScorePayload = arg(payload)?;
            json!(backend.score_patch(&p.bbox, &p.descriptor).map_err(err)?)
        }
        "describe_free" => {
            let p: DescribePayload = arg(payload)?;
            json!(backend.describe(&p.mask, &p.context).map_err(err)?)
        }
        "interpret_command" => {
            let p: InterpretPayload = arg(payload)?;
            match backend.interpret_command(&p.utterance, &p.history).map_err(err)? {
                Ok(command) => json!(InterpretResult::Parsed { command }),
                Err(e) => json!(InterpretResult::Rejected { rejected: e.to_string() }),
            }
        }
        other => return Err(format!("unknown capability {other:?}")),
    };
    Ok(out)
}

/// Server side: answers one encoded request with `backend`. Lets any
/// backend, usually the oracle, act as a sidecar.
pub fn handle_wire_request(backend: &dyn ModelBackend, request: &str) -> String {
    let response = match serde_json::from_str::<WireRequest>(request.trim()) {
        Err(e) => WireResponse { request_id: String::new(), ok: false, payload: None, error: Some(format!("bad request: {e}")) },
        Ok(req) => match answer(backend, &req.capability, req.payload) {
            Ok(payload) => WireResponse { request_id: req.request_id, ok: true, payload: Some(payload), error: None },
            Err(e) => WireResponse { request_id: req.request_id, ok: false, payload: None, error: Some(e) },
        },
    };
    serde_json::to_string(&response).expect("responses serialize")
}
