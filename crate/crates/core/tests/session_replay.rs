use std::sync::Arc;

use gazeref_core::backend::BackendMode;
use gazeref_core::config::PipelineConfig;
use gazeref_core::dialog::TurnKind;
use gazeref_core::scene::Scene;
use gazeref_core::session::{log_from_jsonl, log_to_jsonl, replay, LogRecord, Session, SessionError, SessionSnapshot};
use gazeref_core::sim::{generate_scene, simulate_gaze, GazeNoiseModel, GeneratorConfig, TrialCondition};

fn session(n: usize, seed: u64) -> (Session, u32) {
    let doc = generate_scene(TrialCondition::all()[n], seed, &GeneratorConfig::default()).unwrap();
    let scene = Arc::new(doc.build().unwrap());
    (Session::open(scene, PipelineConfig::default(), BackendMode::default()).unwrap(), doc.target_id)
}

fn gaze(session: &mut Session, target: u32, noise: GazeNoiseModel) {
    let scene: Arc<Scene> = session.scene().clone();
    let stream = simulate_gaze(&scene, target, &noise, 0.5, 90.0).unwrap();
    session.gaze_select(&stream, 0.5).unwrap();
}

#[test]
fn first_turns_describe_the_selection() {
    let (mut s, target) = session(0, 3);
    gaze(&mut s, target, GazeNoiseModel::none());
    let describe = s.history().iter().find(|t| t.kind == TurnKind::Describe).expect("describe turn");
    assert!(describe.text.as_deref().unwrap().starts_with("I've selected"), "{:?}", describe.text);
    assert!(s.snapshot().state.current_mask.is_some());
}

#[test]
fn replay_reproduces_the_log() {
    for seed in 0..6 {
        let (mut s, target) = session(seed as usize * 2, seed);
        gaze(&mut s, target, GazeNoiseModel::calibrated().with_seed(seed));
        let _ = s.apply_command("the one on the left");
        let _ = s.apply_command("the red one");
        let log = s.log().to_vec();
        assert_eq!(replay(&log).unwrap(), log);
        let text = log_to_jsonl(&log);
        assert_eq!(log_from_jsonl(&text).unwrap(), log);
        assert_eq!(log_to_jsonl(&log_from_jsonl(&text).unwrap()), text);
    }
}

#[test]
fn replay_requires_a_start_record() {
    let err = replay(&[LogRecord::Command { utterance: "the cup".into() }]).unwrap_err();
    assert!(matches!(err, SessionError::Invalid(_)));
}

#[test]
fn round_limit_is_reported_and_reset_by_gaze() {
    let (mut s, target) = session(1, 9);
    gaze(&mut s, target, GazeNoiseModel::none());
    let max = s.snapshot().max_rounds;
    assert_eq!(max, 2);
    for _ in 0..max {
        s.apply_command("the one on the left").unwrap();
    }
    assert_eq!(s.snapshot().rounds_remaining, 0);
    assert!(matches!(s.apply_command("the one on the right"), Err(SessionError::RoundLimit { max_rounds: 2 })));
    gaze(&mut s, target, GazeNoiseModel::none());
    assert_eq!(s.snapshot().rounds_remaining, 2);
}

#[test]
fn commands_need_a_selection() {
    let (mut s, _) = session(0, 1);
    assert!(matches!(s.apply_command("the red cup"), Err(SessionError::NoSelection)));
}

#[test]
fn empty_windows_report_missing_gaze() {
    let (mut s, _) = session(0, 1);
    assert!(matches!(s.gaze_select(&[], 0.5), Err(SessionError::NoGazeData)));
}

#[test]
fn snapshots_round_trip() {
    let (mut s, target) = session(6, 4);
    gaze(&mut s, target, GazeNoiseModel::none());
    let _ = s.apply_command("the one on the left");
    let snap = s.snapshot();
    let text = serde_json::to_string(&snap).unwrap();
    assert_eq!(serde_json::from_str::<SessionSnapshot>(&text).unwrap(), snap);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["version"], "v1");
}
