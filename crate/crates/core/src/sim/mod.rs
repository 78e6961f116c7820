//! Synthetic trials: scenes for the twelve size / clutter / ambiguity
//! conditions, noisy gaze, a scripted user, the error taxonomy and
//! aggregated metrics.

mod classify;
mod experiment;
mod generate;
mod noise;
mod script;

pub use classify::{attribute_disambiguation_error, classify_gaze_error, classify_mask, MaskMeasures, COVERAGE_THRESHOLD, PRECISION_FLOOR};
pub use experiment::{
    run_experiment, run_trial, self_consistency_trial, ConditionMetrics, CorruptionConfig, ExperimentConfig, MetricsReport, TrialResult,
    TurnSummary, REPORT_VERSION,
};
pub use generate::{box_gap, check_condition, generate_scene, GeneratorConfig, SimScene, CATEGORIES};
pub use noise::{fixation_stream, simulate_gaze, GazeNoiseModel};
pub use script::{script_command, ScriptedCommand, AFFIRMATIVE_REPLY};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::scene::SceneError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectSize {
    Small,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clutter {
    Cluttered,
    Clean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambiguity {
    Structural,
    Positional,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrialCondition {
    pub size: ObjectSize,
    pub clutter: Clutter,
    pub ambiguity: Ambiguity,
}

impl TrialCondition {
    pub const fn new(size: ObjectSize, clutter: Clutter, ambiguity: Ambiguity) -> Self {
        TrialCondition { size, clutter, ambiguity }
    }

    /// C1 through C12: size, then clutter, then ambiguity.
    pub fn all() -> Vec<TrialCondition> {
        let mut out = Vec::with_capacity(12);
        for size in [ObjectSize::Small, ObjectSize::Normal] {
            for clutter in [Clutter::Cluttered, Clutter::Clean] {
                for ambiguity in [Ambiguity::Structural, Ambiguity::Positional, Ambiguity::None] {
                    out.push(TrialCondition::new(size, clutter, ambiguity));
                }
            }
        }
        out
    }

    /// 1-based position in [`TrialCondition::all`].
    pub fn number(&self) -> usize {
        let s = match self.size {
            ObjectSize::Small => 0,
            ObjectSize::Normal => 1,
        };
        let c = match self.clutter {
            Clutter::Cluttered => 0,
            Clutter::Clean => 1,
        };
        let a = match self.ambiguity {
            Ambiguity::Structural => 0,
            Ambiguity::Positional => 1,
            Ambiguity::None => 2,
        };
        s * 6 + c * 3 + a + 1
    }

    pub fn label(&self) -> String {
        format!("C{}", self.number())
    }

    /// Accepts `C1`..`C12` (case-insensitive).
    pub fn from_label(label: &str) -> Option<TrialCondition> {
        let n: usize = label.trim().strip_prefix(['C', 'c'])?.parse().ok()?;
        TrialCondition::all().get(n.checked_sub(1)?).copied()
    }

    /// Comma-separated labels or `all`.
    pub fn parse_list(text: &str) -> Result<Vec<TrialCondition>, String> {
        if text.trim().eq_ignore_ascii_case("all") {
            return Ok(TrialCondition::all());
        }
        text.split(',').map(|l| TrialCondition::from_label(l).ok_or_else(|| format!("unknown condition {l:?}"))).collect()
    }
}

impl std::fmt::Display for TrialCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({:?}, {:?}, {:?})", self.label(), self.size, self.clutter, self.ambiguity)
    }
}

/// Why a gaze selection missed its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GazeErrorType {
    PartOf,
    MoreThan,
    OtherObject,
    Background,
}

impl GazeErrorType {
    pub const ALL: [GazeErrorType; 4] = [GazeErrorType::PartOf, GazeErrorType::MoreThan, GazeErrorType::OtherObject, GazeErrorType::Background];
}

/// Why a correction command failed to reach the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisambiguationErrorType {
    ObjectDetection,
    ObjectFiltering,
    HumanCommand,
    SpeechRecognition,
    ModelComprehension,
    ObjectLocalization,
}

impl DisambiguationErrorType {
    pub const ALL: [DisambiguationErrorType; 6] = [
        DisambiguationErrorType::ObjectDetection,
        DisambiguationErrorType::ObjectFiltering,
        DisambiguationErrorType::HumanCommand,
        DisambiguationErrorType::SpeechRecognition,
        DisambiguationErrorType::ModelComprehension,
        DisambiguationErrorType::ObjectLocalization,
    ];
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("no feasible layout for {condition} with seed {seed} after {attempts} attempts")]
    Infeasible { condition: String, seed: u64, attempts: u32 },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid simulator parameters: {0}")]
    Invalid(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_numbering_follows_the_table() {
        let all = TrialCondition::all();
        assert_eq!(all.len(), 12);
        assert_eq!(all[0], TrialCondition::new(ObjectSize::Small, Clutter::Cluttered, Ambiguity::Structural));
        assert_eq!(all[1].label(), "C2");
        assert_eq!(all[1].ambiguity, Ambiguity::Positional);
        assert_eq!(all[11], TrialCondition::new(ObjectSize::Normal, Clutter::Clean, Ambiguity::None));
        for (i, c) in all.iter().enumerate() {
            assert_eq!(c.number(), i + 1);
            assert_eq!(TrialCondition::from_label(&c.label()), Some(*c));
        }
        assert_eq!(TrialCondition::from_label("C13"), None);
        assert_eq!(TrialCondition::from_label("c0"), None);
        assert_eq!(TrialCondition::parse_list("C1,c12").unwrap().len(), 2);
        assert!(TrialCondition::parse_list("C1,x").is_err());
    }
}
