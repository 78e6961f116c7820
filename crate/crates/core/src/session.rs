//! The interactive loop: gaze selection, description, correction commands.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, BackendMode, ModelBackend};
use crate::config::PipelineConfig;
use crate::describer::{build_context_region, render_fallback_query, ContextRegion, Description};
use crate::dialog::{Actor, DialogTurn, StageTrace, TurnKind};
use crate::disambiguator::{disambiguate, DisambiguationError, Outcome};
use crate::gaze::{sample_prompt, GazeError, GazePoint};
use crate::geometry::Mask;
use crate::parser::ParsedCommand;
use crate::scene::{Scene, SceneSpec};

pub const SNAPSHOT_VERSION: &str = "v1";
pub const STAGE_SAMPLE: &str = "sample_prompt";
pub const STAGE_SEGMENT: &str = "segment_point";
pub const STAGE_DESCRIBE: &str = "describe";
pub const STAGE_PARSE: &str = "parse";
/// Trace flag on commands issued after a command already selected something.
pub const FLAG_AFTER_SELECTED: &str = "after_selected";

const NO_GAZE_TEXT: &str = "I couldn't see where you were looking. Look at the object and try selecting again.";
const REPHRASE_TEXT: &str = "Sorry, I didn't catch which object you mean. Could you say it another way?";
const NOT_FOUND_TEXT: &str = "I couldn't find that object in the area you looked at.";
const AFFIRMATIVE: &[&str] = &["yes", "yeah", "yep", "ok", "okay", "correct", "right", "sure", "yes please", "that's right", "that is right"];

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum SessionError {
    #[error("the round limit of {max_rounds} has been reached; select again with gaze")]
    RoundLimit { max_rounds: u32 },
    #[error("nothing has been selected yet")]
    NoSelection,
    #[error("no gaze samples in the selection window")]
    NoGazeData,
    #[error("{stage}: {message}")]
    Backend { stage: String, message: String, unavailable: bool },
    #[error("{0}")]
    Invalid(String),
}

/// Best guess waiting for a yes/no after a fallback question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingGuess {
    pub mask: Mask,
    pub description: Description,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub scene_id: String,
    pub current_mask: Option<Mask>,
    pub gaze_centroid: Option<(f64, f64)>,
    pub context: Option<ContextRegion>,
    pub history: Vec<DialogTurn>,
    pub rounds_used: u32,
    pub config: PipelineConfig,
    #[serde(default)]
    pub pending_guess: Option<PendingGuess>,
    /// A command in the current selection already produced a selection.
    #[serde(default)]
    pub selected_by_command: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub version: String,
    pub state: SessionState,
    pub max_rounds: u32,
    pub rounds_remaining: u32,
}

/// One line of a session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogRecord {
    Start { scene: SceneSpec, config: PipelineConfig, backend: BackendMode },
    Gaze { stream: Vec<GazePoint>, select_time: f64 },
    Command { utterance: String },
    Turn { turn: DialogTurn },
}

pub fn log_to_jsonl(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("log records serialize"));
        out.push('\n');
    }
    out
}

pub fn log_from_jsonl(text: &str) -> Result<Vec<LogRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

pub struct Session {
    state: SessionState,
    scene: Arc<Scene>,
    backend: Arc<dyn ModelBackend>,
    log: Vec<LogRecord>,
}

fn backend_error(stage: &str, e: &BackendError) -> SessionError {
    SessionError::Backend { stage: stage.to_string(), message: e.to_string(), unavailable: e.is_unavailable() }
}

impl Session {
    pub fn start(scene: Arc<Scene>, backend: Arc<dyn ModelBackend>, config: PipelineConfig, mode: BackendMode) -> Result<Session, SessionError> {
        config.validate().map_err(|e| SessionError::Invalid(e.to_string()))?;
        let state = SessionState {
            scene_id: scene.id().to_string(),
            current_mask: None,
            gaze_centroid: None,
            context: None,
            history: Vec::new(),
            rounds_used: 0,
            config,
            pending_guess: None,
            selected_by_command: false,
        };
        let log = vec![LogRecord::Start { scene: scene.spec().clone(), config, backend: mode }];
        Ok(Session { state, scene, backend, log })
    }

    /// Session with the backend `mode` opens for `scene`.
    pub fn open(scene: Arc<Scene>, config: PipelineConfig, mode: BackendMode) -> Result<Session, SessionError> {
        let backend = mode.open(scene.clone()).map_err(|e| backend_error("open_backend", &e))?;
        Session::start(scene, backend, config, mode)
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn scene(&self) -> &Arc<Scene> {
        &self.scene
    }

    pub fn history(&self) -> &[DialogTurn] {
        &self.state.history
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        let max = self.state.config.max_rounds;
        SessionSnapshot {
            version: SNAPSHOT_VERSION.into(),
            state: self.state.clone(),
            max_rounds: max,
            rounds_remaining: max.saturating_sub(self.state.rounds_used),
        }
    }

    fn push(&mut self, mut turn: DialogTurn) -> DialogTurn {
        turn.index = self.state.history.len();
        self.state.history.push(turn.clone());
        self.log.push(LogRecord::Turn { turn: turn.clone() });
        turn
    }

    fn system(&mut self, kind: TurnKind, text: String) -> DialogTurn {
        self.push(DialogTurn::new(0, Actor::System, kind).with_text(text))
    }

    fn fail(&mut self, error: SessionError, trace: Vec<StageTrace>) -> SessionError {
        let mut turn = DialogTurn::new(0, Actor::System, TurnKind::Error).with_text(error.to_string());
        turn.trace = trace;
        self.push(turn);
        error
    }

    fn describe(&self, mask: &Mask) -> Result<(Description, ContextRegion), BackendError> {
        let centroid = self.state.gaze_centroid.unwrap_or_else(|| mask.centroid().unwrap_or((0.0, 0.0)));
        let context = build_context_region((self.scene.width(), self.scene.height()), mask, centroid, self.state.config.context_padding)
            .map_err(|e| BackendError::InvalidInput { capability: "describe_free".into(), reason: e.to_string() })?;
        Ok((self.backend.describe(mask, &context)?, context))
    }

    /// Gaze window to point prompt to mask to description. Resets the round
    /// count.
    pub fn gaze_select(&mut self, stream: &[GazePoint], select_time: f64) -> Result<Vec<DialogTurn>, SessionError> {
        self.log.push(LogRecord::Gaze { stream: stream.to_vec(), select_time });
        let config = self.state.config;
        let mut gaze_turn = DialogTurn::new(0, Actor::User, TurnKind::GazeSelect);
        let summary = match sample_prompt(stream, self.scene.as_ref(), select_time, &config.sampler, self.scene.pixels_per_degree()) {
            Ok(s) => s,
            Err(GazeError::NoGazeData) => {
                self.push(gaze_turn);
                self.system(TurnKind::Error, NO_GAZE_TEXT.into());
                return Err(SessionError::NoGazeData);
            }
            Err(e) => {
                self.push(gaze_turn);
                return Err(self.fail(SessionError::Invalid(e.to_string()), Vec::new()));
            }
        };
        let (w, h) = (self.scene.width() as f64, self.scene.height() as f64);
        let point = (summary.centroid.0.clamp(0.0, w - 1.0), summary.centroid.1.clamp(0.0, h - 1.0));
        let mut sample_trace = StageTrace::new(STAGE_SAMPLE);
        sample_trace.rationale = format!(
            "point ({:.1}, {:.1}) from {} of {} samples in {} clusters",
            point.0, point.1, summary.members, summary.window_size, summary.cluster_count
        );
        gaze_turn.trace.push(sample_trace);
        let segmentation = match self.backend.segment_point(point) {
            Ok(s) => s,
            Err(e) => {
                self.push(gaze_turn);
                return Err(self.fail(backend_error(STAGE_SEGMENT, &e), Vec::new()));
            }
        };
        let best = segmentation.best_index();
        let mut seg_trace = StageTrace::new(STAGE_SEGMENT);
        seg_trace.scores = segmentation.confidences.iter().enumerate().map(|(i, c)| (i as u32, *c)).collect();
        seg_trace.kept = vec![best as u32];
        seg_trace.rationale = "highest-confidence mask".into();
        gaze_turn.trace.push(seg_trace);
        let mask = segmentation.masks[best].clone();

        self.state.gaze_centroid = Some(point);
        self.state.rounds_used = 0;
        self.state.pending_guess = None;
        self.state.selected_by_command = false;
        let (description, context) = match self.describe(&mask) {
            Ok(v) => v,
            Err(e) => {
                self.push(gaze_turn);
                return Err(self.fail(backend_error(STAGE_DESCRIBE, &e), Vec::new()));
            }
        };
        self.state.current_mask = Some(mask.clone());
        self.state.context = Some(context);
        let gaze_turn = self.push(gaze_turn);
        let mut describe = DialogTurn::new(0, Actor::System, TurnKind::Describe).with_text(description.full_text.clone());
        describe.mask = Some(mask);
        describe.description = Some(description);
        let describe = self.push(describe);
        Ok(vec![gaze_turn, describe])
    }

    fn last_system_kind(&self) -> Option<TurnKind> {
        self.state.history.iter().rev().find(|t| t.actor == Actor::System && t.kind != TurnKind::Error).map(|t| t.kind)
    }

    /// One correction command. Unparseable commands and confirmations of a
    /// fallback guess do not use up a round.
    pub fn apply_command(&mut self, utterance: &str) -> Result<Vec<DialogTurn>, SessionError> {
        self.log.push(LogRecord::Command { utterance: utterance.to_string() });
        let (Some(previous), Some(context)) = (self.state.current_mask.clone(), self.state.context) else {
            return Err(self.fail(SessionError::NoSelection, Vec::new()));
        };
        let normalized = utterance.trim().trim_end_matches(['.', '!', ',']).to_lowercase();
        if self.last_system_kind() == Some(TurnKind::FallbackQuery) && AFFIRMATIVE.contains(&normalized.as_str()) {
            if let Some(guess) = self.state.pending_guess.take() {
                let user = self.push(DialogTurn::new(0, Actor::User, TurnKind::Command).with_text(utterance));
                self.state.current_mask = Some(guess.mask.clone());
                self.state.selected_by_command = true;
                let mut describe = DialogTurn::new(0, Actor::System, TurnKind::Describe).with_text(guess.description.full_text.clone());
                describe.mask = Some(guess.mask);
                describe.description = Some(guess.description);
                let mut t = StageTrace::new("confirm_guess");
                t.rationale = "fallback guess confirmed".into();
                describe.trace.push(t);
                let describe = self.push(describe);
                return Ok(vec![user, describe]);
            }
        }
        let max = self.state.config.max_rounds;
        if self.state.rounds_used >= max {
            return Err(self.fail(SessionError::RoundLimit { max_rounds: max }, Vec::new()));
        }
        let parsed = match self.backend.interpret_command(utterance, &self.state.history) {
            Ok(p) => p,
            Err(e) => return Err(self.fail(backend_error(STAGE_PARSE, &e), Vec::new())),
        };
        let mut user = DialogTurn::new(0, Actor::User, TurnKind::Command).with_text(utterance);
        let command: ParsedCommand = match parsed {
            Ok(c) => c,
            Err(e) => {
                let mut t = StageTrace::new(STAGE_PARSE);
                t.rationale = e.to_string();
                user.trace.push(t);
                let user = self.push(user);
                let reply = self.system(TurnKind::Error, REPHRASE_TEXT.into());
                return Ok(vec![user, reply]);
            }
        };
        user.parsed = Some(command.clone());
        if self.state.selected_by_command {
            let mut t = StageTrace::new(STAGE_PARSE);
            t.flags.push(FLAG_AFTER_SELECTED.into());
            user.trace.push(t);
        }
        let outcome = disambiguate(&command, Some(&previous), &context, self.backend.as_ref(), &self.state.config.filter);
        let result = match outcome {
            Ok(r) => r,
            Err(DisambiguationError::Backend { stage, error }) => {
                self.push(user);
                return Err(self.fail(backend_error(stage, &error), Vec::new()));
            }
            Err(e) => {
                self.push(user);
                return Err(self.fail(SessionError::Invalid(e.to_string()), Vec::new()));
            }
        };
        self.state.rounds_used += 1;
        self.state.pending_guess = None;
        let user = self.push(user);
        let describe_mask = |s: &Session, m: &Mask| s.describe(m).map(|(d, _)| d).map_err(|e| backend_error(STAGE_DESCRIBE, &e));
        let reply = match (&result.result.outcome, result.mask.clone()) {
            (Outcome::Selected { .. }, Some(mask)) => {
                let description = match describe_mask(self, &mask) {
                    Ok(d) => d,
                    Err(e) => return Err(self.fail(e, result.traces)),
                };
                self.state.current_mask = Some(mask.clone());
                self.state.selected_by_command = true;
                let mut t = DialogTurn::new(0, Actor::System, TurnKind::Describe).with_text(description.full_text.clone());
                t.mask = Some(mask);
                t.description = Some(description);
                t.trace = result.traces;
                t
            }
            (_, Some(guess)) => {
                let description = match describe_mask(self, &guess) {
                    Ok(d) => d,
                    Err(e) => return Err(self.fail(e, result.traces)),
                };
                self.state.pending_guess = Some(PendingGuess { mask: guess.clone(), description: description.clone() });
                let mut t = DialogTurn::new(0, Actor::System, TurnKind::FallbackQuery).with_text(render_fallback_query(&description));
                t.mask = Some(guess);
                t.description = Some(description);
                t.trace = result.traces;
                t
            }
            (_, None) => {
                let mut t = DialogTurn::new(0, Actor::System, TurnKind::Error).with_text(NOT_FOUND_TEXT);
                t.trace = result.traces;
                t
            }
        };
        let reply = self.push(reply);
        Ok(vec![user, reply])
    }
}

/// Re-runs a recorded session against the backend its start record names
/// and returns the new log.
pub fn replay(records: &[LogRecord]) -> Result<Vec<LogRecord>, SessionError> {
    let Some(LogRecord::Start { scene, config, backend }) = records.first() else {
        return Err(SessionError::Invalid("log does not begin with a start record".into()));
    };
    let scene = Arc::new(Scene::build(scene.clone()).map_err(|e| SessionError::Invalid(e.to_string()))?);
    let mut session = Session::open(scene, *config, backend.clone())?;
    for r in &records[1..] {
        // Errors are part of the recorded turn sequence.
        match r {
            LogRecord::Gaze { stream, select_time } => {
                let _ = session.gaze_select(stream, *select_time);
            }
            LogRecord::Command { utterance } => {
                let _ = session.apply_command(utterance);
            }
            LogRecord::Turn { .. } | LogRecord::Start { .. } => {}
        }
    }
    Ok(session.log)
}
