//! Pipeline parameters in one place.

use serde::{Deserialize, Serialize};

use crate::describer::DescriberConfig;
use crate::gaze::SamplerConfig;

/// Crop padding around the selected mask, pixels.
pub const DEFAULT_CONTEXT_PADDING: u32 = 150;
/// Overlap tolerance of the left/right/above/below heuristics.
pub const DEFAULT_SIDE_ALPHA: f64 = 0.5;
/// Candidates kept by the proximity filter.
pub const DEFAULT_KEEP_N: usize = 7;
/// Scores must exceed this to select; ordinal matches need at least this.
pub const DEFAULT_LOCALIZE_THRESHOLD: f64 = 0.5;
pub const DEFAULT_MAX_ROUNDS: u32 = 2;
pub const DEFAULT_NMS_THRESHOLD: f64 = 0.8;
/// 90 degree field of view over 1080 px.
pub const DEFAULT_PIXELS_PER_DEGREE: f64 = 12.0;
pub const DEFAULT_FRAME_SIZE: u32 = 1080;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub nms_threshold: f64,
    pub side_alpha: f64,
    pub keep_n: usize,
    pub localize_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            nms_threshold: DEFAULT_NMS_THRESHOLD,
            side_alpha: DEFAULT_SIDE_ALPHA,
            keep_n: DEFAULT_KEEP_N,
            localize_threshold: DEFAULT_LOCALIZE_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub sampler: SamplerConfig,
    pub context_padding: u32,
    pub filter: FilterConfig,
    pub describer: DescriberConfig,
    pub max_rounds: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sampler: SamplerConfig::default(),
            context_padding: DEFAULT_CONTEXT_PADDING,
            filter: FilterConfig::default(),
            describer: DescriberConfig { side_alpha: DEFAULT_SIDE_ALPHA, ..DescriberConfig::default() },
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sampler.validate().map_err(|e| ConfigError(e.to_string()))?;
        let f = &self.filter;
        if !(0.0..=1.0).contains(&f.side_alpha) {
            return Err(ConfigError(format!("side_alpha {} outside [0, 1]", f.side_alpha)));
        }
        if f.keep_n == 0 {
            return Err(ConfigError("keep_n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&f.nms_threshold) || !(0.0..=1.0).contains(&f.localize_threshold) {
            return Err(ConfigError("thresholds must lie in [0, 1]".into()));
        }
        if self.max_rounds == 0 {
            return Err(ConfigError("max_rounds must be at least 1".into()));
        }
        Ok(())
    }
}
