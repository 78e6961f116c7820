use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use gazeref_core::backend::BackendMode;
use gazeref_core::config::PipelineConfig;
use serde::{Deserialize, Serialize};

/// Settings for `serve`. Loaded from a JSON file; flags and `GAZEREF_*`
/// environment variables override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub listen: String,
    pub backend: BackendMode,
    pub pipeline: PipelineConfig,
    /// One `<session>.jsonl` file per session when set.
    pub log_dir: Option<PathBuf>,
    /// Extra scenes, one JSON file per scene, named `<scene id>.json`.
    pub scene_dir: Option<PathBuf>,
    pub max_sessions: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: "127.0.0.1:8080".into(),
            backend: BackendMode::default(),
            pipeline: PipelineConfig::default(),
            log_dir: None,
            scene_dir: None,
            max_sessions: 64,
        }
    }
}

impl ServiceConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.listen.parse::<SocketAddr>().with_context(|| format!("invalid listen address {:?}", self.listen))?;
        self.pipeline.validate().map_err(|e| anyhow::anyhow!("pipeline: {e}"))?;
        if self.max_sessions == 0 {
            bail!("max_sessions must be at least 1");
        }
        if let BackendMode::Oracle { degradation } = &self.backend {
            degradation.validate().map_err(|e| anyhow::anyhow!("degradation: {e}"))?;
        }
        Ok(())
    }
}

/// `oracle`, an `http://` sidecar URL, or `stdio:<command>`.
pub fn parse_backend(text: &str) -> anyhow::Result<BackendMode> {
    if text == "oracle" {
        return Ok(BackendMode::default());
    }
    if text.starts_with("http://") || text.starts_with("https://") || text.starts_with("stdio:") {
        return Ok(BackendMode::Wire { endpoint: text.to_string(), timeout_ms: 5000, fallback_to_oracle: false });
    }
    bail!("backend must be \"oracle\", an http(s) URL or stdio:<command>, got {text:?}")
}
