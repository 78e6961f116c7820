//! Conversation records shared by the parser, the session and the logs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::describer::Description;
use crate::geometry::{BBox, CandidateSource, Mask};
use crate::parser::ParsedCommand;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Actor {
    User,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TurnKind {
    GazeSelect,
    Describe,
    Command,
    FallbackQuery,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceCandidate {
    pub id: u32,
    pub bbox: BBox,
    pub source: CandidateSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// What one pipeline stage saw and kept.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTrace {
    pub stage: String,
    #[serde(default)]
    pub candidates_in: Vec<TraceCandidate>,
    #[serde(default)]
    pub kept: Vec<u32>,
    #[serde(default)]
    pub scores: BTreeMap<u32, f64>,
    #[serde(default)]
    pub rationale: String,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl StageTrace {
    pub fn new(stage: &str) -> Self {
        StageTrace { stage: stage.to_string(), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogTurn {
    pub index: usize,
    pub actor: Actor,
    pub kind: TurnKind,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub mask: Option<Mask>,
    #[serde(default)]
    pub parsed: Option<ParsedCommand>,
    #[serde(default)]
    pub description: Option<Description>,
    #[serde(default)]
    pub trace: Vec<StageTrace>,
}

impl DialogTurn {
    pub fn new(index: usize, actor: Actor, kind: TurnKind) -> Self {
        DialogTurn { index, actor, kind, text: None, mask: None, parsed: None, description: None, trace: Vec::new() }
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }
}
