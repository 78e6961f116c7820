use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use clap::Parser;
use gazeref::cli::{service_config, Cli, Command as Sub};
use gazeref_core::backend::BackendMode;
use gazeref_core::config::PipelineConfig;
use gazeref_core::session::{log_from_jsonl, log_to_jsonl, LogRecord, Session};
use gazeref_core::sim::{generate_scene, simulate_gaze, GazeNoiseModel, GeneratorConfig, TrialCondition};
use serde_json::Value;

fn gazeref(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gazeref")).args(args).current_dir(dir).output().unwrap()
}

fn error_of(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(out.stderr.trim_ascii()).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn write_session_log(path: &Path) {
    let doc = generate_scene(TrialCondition::all()[8], 2, &GeneratorConfig::default()).unwrap();
    let scene = Arc::new(doc.build().unwrap());
    let mut s = Session::open(scene.clone(), PipelineConfig::default(), BackendMode::default()).unwrap();
    let stream = simulate_gaze(&scene, doc.target_id, &GazeNoiseModel::calibrated(), 0.5, 90.0).unwrap();
    s.gaze_select(&stream, 0.5).unwrap();
    let _ = s.apply_command("the one on the left");
    std::fs::write(path, log_to_jsonl(s.log())).unwrap();
}

#[test]
fn scene_gen_validate_render() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gazeref(&["scene", "gen", "--condition", "C5", "--seed", "3", "--out", "s.json"], dir.path()).status.success());
    let out = gazeref(&["scene", "validate", "s.json"], dir.path());
    assert!(out.status.success());
    assert_eq!(serde_json::from_slice::<Value>(&out.stdout).unwrap()["valid"], true);
    assert!(gazeref(&["scene", "render", "s.json", "--out", "s.png"], dir.path()).status.success());
    assert!(std::fs::read(dir.path().join("s.png")).unwrap().starts_with(b"\x89PNG"));

    // Push the target out of its condition: stretch every object to the full frame.
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    for o in doc["scene"]["objects"].as_array_mut().unwrap() {
        o["polygon"] = serde_json::json!([[0.0, 0.0], [1000.0, 0.0], [1000.0, 1000.0], [0.0, 1000.0]]);
        o["parts"] = serde_json::json!([]);
    }
    std::fs::write(dir.path().join("bad.json"), doc.to_string()).unwrap();
    let err = error_of(&gazeref(&["scene", "validate", "bad.json"], dir.path()));
    assert_eq!(err["error"], "invalid_scene");
    assert!(!err["details"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn replay_check_passes_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    write_session_log(&dir.path().join("s.jsonl"));
    let out = gazeref(&["replay", "s.jsonl", "--check"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(out.stdout, std::fs::read(dir.path().join("s.jsonl")).unwrap());

    let mut log = log_from_jsonl(&std::fs::read_to_string(dir.path().join("s.jsonl")).unwrap()).unwrap();
    for r in log.iter_mut() {
        if let LogRecord::Turn { turn } = r {
            turn.text = Some("something else".into());
        }
    }
    std::fs::write(dir.path().join("t.jsonl"), log_to_jsonl(&log)).unwrap();
    let err = error_of(&gazeref(&["replay", "t.jsonl", "--check"], dir.path()));
    assert_eq!(err["error"], "replay_mismatch");
}

#[test]
fn experiments_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["experiment", "--trials", "3", "--noise", "calibrated", "--seed", "5", "--out", out];
    assert!(gazeref(&args("a"), dir.path()).status.success());
    assert!(gazeref(&args("b"), dir.path()).status.success());
    for f in ["report.json", "table.txt", "trials.jsonl"] {
        let (a, b) = (std::fs::read(dir.path().join("a").join(f)).unwrap(), std::fs::read(dir.path().join("b").join(f)).unwrap());
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn failures_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let err = error_of(&gazeref(&["experiment", "--noise", "loud"], dir.path()));
    assert_eq!(err["error"], "failed");
    assert!(err["message"].as_str().unwrap().contains("loud"));
    let err = error_of(&gazeref(&["replay", "missing.jsonl"], dir.path()));
    assert_eq!(err["error"], "io");
    std::fs::write(dir.path().join("c.txt"), "the red cup => [blue] cup ; next_to ; -\n").unwrap();
    let err = error_of(&gazeref(&["corpus", "test", "--file", "c.txt"], dir.path()));
    assert_eq!(err["error"], "corpus_below_threshold");
    assert!(gazeref(&["corpus", "test"], dir.path()).status.success());
}

#[test]
fn serve_settings_come_from_prefixed_environment() {
    std::env::set_var("GAZEREF_MAX_SESSIONS", "3");
    std::env::set_var("MAX_SESSIONS", "9");
    let parsed = |args: &[&str]| match Cli::try_parse_from(args).unwrap().command {
        Sub::Serve(a) => service_config(&a).unwrap(),
        _ => unreachable!(),
    };
    assert_eq!(parsed(&["gazeref", "serve"]).max_sessions, 3);
    assert_eq!(parsed(&["gazeref", "serve", "--max-sessions", "5"]).max_sessions, 5);
    std::env::remove_var("GAZEREF_MAX_SESSIONS");
    assert_eq!(parsed(&["gazeref", "serve"]).max_sessions, 64);
}
