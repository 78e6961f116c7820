//! The model capabilities the pipeline consumes.
//!
//! [`OracleBackend`] answers from scene ground truth; [`WireBackend`]
//! forwards each capability to an external sidecar.

mod oracle;
mod wire;

pub use oracle::{BackendDegradation, OracleBackend, OracleFixtures};
pub use wire::{
    handle_wire_request, FnTransport, HttpTransport, StdioTransport, Transport, WireBackend, WireRequest, WireResponse, CAPABILITIES,
};

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::describer::{ContextRegion, Description};
use crate::dialog::DialogTurn;
use crate::geometry::{BBox, Mask};
use crate::parser::{self, ObjectDescriptor, ParsedCommand};
use crate::scene::Scene;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("point ({0}, {1}) is off the canvas")]
    OffCanvas(f64, f64),
    #[error("invalid input to {capability}: {reason}")]
    InvalidInput { capability: String, reason: String },
    #[error("{capability}: transport failure: {reason}")]
    Transport { capability: String, reason: String },
    #[error("{capability}: timed out after {millis} ms")]
    Timeout { capability: String, millis: u64 },
    #[error("{capability}: malformed response: {reason}")]
    Malformed { capability: String, reason: String },
    #[error("{capability}: protocol error: {reason}")]
    Protocol { capability: String, reason: String },
}

impl BackendError {
    /// Transport failures and timeouts: the sidecar is unreachable.
    pub fn is_unavailable(&self) -> bool {
        matches!(self, BackendError::Transport { .. } | BackendError::Timeout { .. })
    }
}

/// Three masks from one point prompt, part / object / group granularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationResult {
    pub masks: Vec<Mask>,
    pub confidences: Vec<f64>,
}

impl SegmentationResult {
    pub fn validate(&self) -> Result<(), String> {
        if self.masks.len() != 3 || self.confidences.len() != 3 {
            return Err(format!("expected 3 masks and 3 confidences, got {} and {}", self.masks.len(), self.confidences.len()));
        }
        if self.confidences.iter().any(|c| !c.is_finite()) {
            return Err("confidence is not finite".into());
        }
        Ok(())
    }

    /// Index of the highest-confidence mask, first on ties.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, c) in self.confidences.iter().enumerate() {
            if *c > self.confidences[best] {
                best = i;
            }
        }
        best
    }

    pub fn best_mask(&self) -> &Mask {
        &self.masks[self.best_index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSegmentation {
    pub mask: Mask,
    /// Two objects matched the box equally well.
    #[serde(default)]
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchScore {
    pub score: f64,
    #[serde(default)]
    pub rationale: String,
}

/// All capabilities operate on the frame the backend was opened for.
pub trait ModelBackend: Send + Sync {
    fn segment_point(&self, point: (f64, f64)) -> Result<SegmentationResult, BackendError>;
    fn segment_box(&self, bbox: &BBox) -> Result<BoxSegmentation, BackendError>;
    fn segment_everything(&self) -> Result<Vec<Mask>, BackendError>;
    fn detect(&self) -> Result<Vec<Detection>, BackendError>;
    fn judge_noisy(&self, bbox: &BBox) -> Result<bool, BackendError>;
    fn score_patch(&self, bbox: &BBox, descriptor: &ObjectDescriptor) -> Result<PatchScore, BackendError>;
    fn describe(&self, mask: &Mask, context: &ContextRegion) -> Result<Description, BackendError>;

    fn interpret_command(&self, utterance: &str, history: &[DialogTurn]) -> Result<Result<ParsedCommand, parser::ParseError>, BackendError> {
        Ok(parser::interpret(utterance, history))
    }
}

/// How a session obtains its backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BackendMode {
    Oracle {
        #[serde(default)]
        degradation: BackendDegradation,
    },
    Wire {
        endpoint: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        /// Answer from the oracle while the sidecar is unreachable.
        #[serde(default)]
        fallback_to_oracle: bool,
    },
}

fn default_timeout_ms() -> u64 {
    5000
}

impl Default for BackendMode {
    fn default() -> Self {
        BackendMode::Oracle { degradation: BackendDegradation::default() }
    }
}

impl BackendMode {
    /// Backend bound to `scene`. Wire endpoints starting with `stdio:` spawn
    /// the rest of the string as a line-delimited sidecar command.
    pub fn open(&self, scene: Arc<Scene>) -> Result<Arc<dyn ModelBackend>, BackendError> {
        match self {
            BackendMode::Oracle { degradation } => Ok(Arc::new(OracleBackend::new(scene, *degradation))),
            BackendMode::Wire { endpoint, timeout_ms, fallback_to_oracle } => {
                let transport: Box<dyn Transport> = match endpoint.strip_prefix("stdio:") {
                    Some(cmd) => {
                        let mut parts = cmd.split_whitespace().map(String::from);
                        let program = parts.next().unwrap_or_default();
                        let args: Vec<String> = parts.collect();
                        Box::new(StdioTransport::spawn(&program, &args).map_err(|e| BackendError::Transport {
                            capability: "spawn".into(),
                            reason: e.to_string(),
                        })?)
                    }
                    None => Box::new(HttpTransport::new(endpoint.clone())),
                };
                let mut wire = WireBackend::new(transport, scene.id().to_string(), Duration::from_millis(*timeout_ms));
                if *fallback_to_oracle {
                    wire = wire.with_fallback(Arc::new(OracleBackend::new(scene, BackendDegradation::default())));
                }
                Ok(Arc::new(wire))
            }
        }
    }
}

/// Deterministic 64-bit mixing of a seed and a key sequence.
pub fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for p in parts {
        h = splitmix(h ^ p.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    }
    splitmix(h)
}

pub(crate) fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}
