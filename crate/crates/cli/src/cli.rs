use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use gazeref_core::backend::BackendDegradation;
use gazeref_core::parser::corpus::{evaluate, evaluate_committed, parse_corpus, CorpusReport};
use gazeref_core::scene::Scene;
use gazeref_core::session::{log_from_jsonl, log_to_jsonl, replay, LogRecord};
use gazeref_core::sim::{check_condition, generate_scene, run_experiment, ExperimentConfig, GazeNoiseModel, GeneratorConfig, SimScene, TrialCondition};
use serde_json::json;

use crate::api::{read_scene_document, router, AppState};
use crate::config::{parse_backend, ServiceConfig};
use crate::render::scene_png;

/// Corpus thresholds `corpus test` enforces.
pub const CORPUS_MIN_ACCURACY: f64 = 0.95;

#[derive(Debug, Parser)]
#[command(name = "gazeref", version, about = "Gaze referencing with voice disambiguation: service, experiments and tooling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP session service.
    Serve(ServeArgs),
    /// Run simulated trials and write a metrics report.
    Experiment(ExperimentArgs),
    /// Generate, validate or render scenes.
    #[command(subcommand)]
    Scene(SceneCommand),
    /// Re-execute a session log against its recorded backend.
    Replay(ReplayArgs),
    /// Parser corpus tools.
    #[command(subcommand)]
    Corpus(CorpusCommand),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// JSON service configuration; flags below override it.
    #[arg(long, env = "GAZEREF_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "GAZEREF_ADDR")]
    pub addr: Option<String>,
    /// `oracle`, an http(s) sidecar URL, or `stdio:<command>`.
    #[arg(long, env = "GAZEREF_BACKEND")]
    pub backend: Option<String>,
    #[arg(long, env = "GAZEREF_LOG_DIR")]
    pub log_dir: Option<PathBuf>,
    #[arg(long, env = "GAZEREF_SCENE_DIR")]
    pub scene_dir: Option<PathBuf>,
    #[arg(long, env = "GAZEREF_MAX_SESSIONS")]
    pub max_sessions: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON experiment configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `all` or a comma-separated list such as `C1,C7`.
    #[arg(long)]
    pub conditions: Option<String>,
    #[arg(long)]
    pub trials: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise preset: none, calibrated or heavy.
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub bias_deg: Option<f64>,
    #[arg(long)]
    pub jitter_deg: Option<f64>,
    #[arg(long)]
    pub saccade_rate: Option<f64>,
    #[arg(long)]
    pub saccade_amplitude_deg: Option<f64>,
    #[arg(long)]
    pub min_detectable_area: Option<u64>,
    #[arg(long)]
    pub detect_miss_rate: Option<f64>,
    #[arg(long)]
    pub scorer_noise: Option<f64>,
    #[arg(long)]
    pub substitution_rate: Option<f64>,
    #[arg(long)]
    pub uninformative_rate: Option<f64>,
    /// Directory for report.json, table.txt and trials.jsonl.
    #[arg(long, default_value = "experiment-out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SceneCommand {
    /// Generate a scene for a trial condition.
    Gen {
        #[arg(long)]
        condition: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scene document against its condition.
    Validate { file: PathBuf },
    /// Render a scene document to PNG.
    Render {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub log: PathBuf,
    /// Where to write the new log; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fail unless the replayed log equals the input.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Parse every corpus utterance and report structure accuracy.
    Test {
        /// Corpus file; the committed corpus when absent.
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

/// Failure reported by the binary as one JSON object on stderr.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
    pub details: serde_json::Value,
}

impl Failure {
    pub fn to_json(&self) -> String {
        json!({ "error": self.kind, "message": self.message, "details": self.details }).to_string()
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure { kind: "failed", message: format!("{e:#}"), details: serde_json::Value::Null }
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Serve(a) => serve(a).map_err(Failure::from),
        Command::Experiment(a) => experiment(a).map_err(Failure::from),
        Command::Scene(c) => scene(c),
        Command::Replay(a) => replay_log(a),
        Command::Corpus(CorpusCommand::Test { file }) => corpus_test(file.as_deref()),
    }
}

pub fn service_config(a: &ServeArgs) -> anyhow::Result<ServiceConfig> {
    let mut cfg = match &a.config {
        Some(p) => ServiceConfig::load(p)?,
        None => ServiceConfig::default(),
    };
    if let Some(v) = &a.addr {
        cfg.listen = v.clone();
    }
    if let Some(v) = &a.backend {
        cfg.backend = parse_backend(v)?;
    }
    if let Some(v) = &a.log_dir {
        cfg.log_dir = Some(v.clone());
    }
    if let Some(v) = &a.scene_dir {
        cfg.scene_dir = Some(v.clone());
    }
    if let Some(v) = a.max_sessions {
        cfg.max_sessions = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn serve(a: ServeArgs) -> anyhow::Result<()> {
    let cfg = service_config(&a)?;
    if let Some(d) = &cfg.log_dir {
        std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&cfg.listen).await.with_context(|| format!("binding {}", cfg.listen))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(AppState::new(cfg)))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

pub fn experiment_config(a: &ExperimentArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(c) = &a.conditions {
        cfg.conditions = TrialCondition::parse_list(c).map_err(anyhow::Error::msg)?;
    }
    if let Some(v) = a.trials {
        cfg.trials_per_condition = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(name) = &a.noise {
        cfg.noise = GazeNoiseModel::preset(name).with_context(|| format!("unknown noise preset {name:?}"))?;
    }
    let n = &mut cfg.noise;
    for (flag, field) in [
        (a.bias_deg, &mut n.bias_deg),
        (a.jitter_deg, &mut n.jitter_std_deg),
        (a.saccade_rate, &mut n.saccade_rate),
        (a.saccade_amplitude_deg, &mut n.saccade_amplitude_deg),
    ] {
        if let Some(v) = flag {
            *field = v;
        }
    }
    let d: &mut BackendDegradation = &mut cfg.degradation;
    if let Some(v) = a.min_detectable_area {
        d.min_detectable_area = v;
    }
    if let Some(v) = a.detect_miss_rate {
        d.detect_miss_rate = v;
    }
    if let Some(v) = a.scorer_noise {
        d.scorer_noise = v;
    }
    if let Some(v) = a.substitution_rate {
        cfg.corruption.word_substitution_rate = v;
    }
    if let Some(v) = a.uninformative_rate {
        cfg.corruption.uninformative_rate = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn experiment(a: ExperimentArgs) -> anyhow::Result<()> {
    let cfg = experiment_config(&a)?;
    let (report, trials) = run_experiment(&cfg)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut report_json = serde_json::to_string_pretty(&report)?;
    report_json.push('\n');
    std::fs::write(a.out.join("report.json"), report_json)?;
    let table = report.table();
    std::fs::write(a.out.join("table.txt"), &table)?;
    let mut lines = String::new();
    for t in &trials {
        lines.push_str(&serde_json::to_string(t)?);
        lines.push('\n');
    }
    std::fs::write(a.out.join("trials.jsonl"), lines)?;
    print!("{table}");
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure { kind: "io", message: format!("{}: {e}", path.display()), details: json!(null) })
}

fn scene(c: SceneCommand) -> Result<(), Failure> {
    match c {
        SceneCommand::Gen { condition, seed, out } => {
            let cond = TrialCondition::from_label(&condition)
                .ok_or_else(|| Failure { kind: "usage", message: format!("unknown condition {condition:?}"), details: json!(null) })?;
            let doc = generate_scene(cond, seed, &GeneratorConfig::default()).map_err(|e| Failure::from(anyhow::Error::new(e)))?;
            let text = serde_json::to_string_pretty(&doc).expect("scene documents serialize") + "\n";
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| Failure::from(anyhow::Error::new(e)))?,
                None => print!("{text}"),
            }
            Ok(())
        }
        SceneCommand::Validate { file } => {
            let text = read(&file)?;
            let violations = match serde_json::from_str::<SimScene>(&text) {
                Ok(doc) => check_condition(&doc),
                Err(_) => match read_scene_document(&text) {
                    Ok(spec) => Scene::build(spec).err().map(|e| vec![e.to_string()]).unwrap_or_default(),
                    Err(e) => vec![e],
                },
            };
            if violations.is_empty() {
                println!("{}", json!({ "valid": true, "violations": [] }));
                Ok(())
            } else {
                Err(Failure { kind: "invalid_scene", message: format!("{} violation(s)", violations.len()), details: json!({ "violations": violations }) })
            }
        }
        SceneCommand::Render { file, out } => {
            let text = read(&file)?;
            let spec = read_scene_document(&text).map_err(|e| Failure { kind: "invalid_scene", message: e, details: json!(null) })?;
            let scene = Scene::build(spec).map_err(|e| Failure { kind: "invalid_scene", message: e.to_string(), details: json!(null) })?;
            std::fs::write(&out, scene_png(&scene, None)).map_err(|e| Failure::from(anyhow::Error::new(e)))
        }
    }
}

fn replay_log(a: ReplayArgs) -> Result<(), Failure> {
    let text = read(&a.log)?;
    let records = log_from_jsonl(&text).map_err(|e| Failure { kind: "invalid_log", message: e.to_string(), details: json!(null) })?;
    let fresh = replay(&records).map_err(|e| Failure { kind: "replay", message: e.to_string(), details: json!(null) })?;
    let out = log_to_jsonl(&fresh);
    match &a.out {
        Some(p) => std::fs::write(p, &out).map_err(|e| Failure::from(anyhow::Error::new(e)))?,
        None => print!("{out}"),
    }
    if a.check && fresh != records {
        let first = records.iter().zip(&fresh).position(|(x, y)| x != y).unwrap_or(records.len().min(fresh.len()));
        let turns = |r: &[LogRecord]| r.iter().filter(|x| matches!(x, LogRecord::Turn { .. })).count();
        return Err(Failure {
            kind: "replay_mismatch",
            message: format!("replayed log differs at record {first}"),
            details: json!({ "recorded_turns": turns(&records), "replayed_turns": turns(&fresh) }),
        });
    }
    Ok(())
}

pub fn corpus_summary(report: &CorpusReport) -> serde_json::Value {
    json!({
        "total": report.total,
        "correct": report.correct,
        "accuracy": report.accuracy(),
        "keyword_total": report.keyword_total,
        "keyword_correct": report.keyword_correct,
        "keyword_accuracy": report.keyword_accuracy(),
        "failures": report.failures.iter().map(|f| json!({
            "line": f.line, "utterance": f.utterance, "expected": f.expected, "got": f.got
        })).collect::<Vec<_>>(),
    })
}

fn corpus_test(file: Option<&Path>) -> Result<(), Failure> {
    let bad = |e: String| Failure { kind: "invalid_corpus", message: e, details: json!(null) };
    let report = match file {
        Some(p) => evaluate(&parse_corpus(&read(p)?).map_err(|e| bad(e.to_string()))?),
        None => evaluate_committed().map_err(|e| bad(e.to_string()))?,
    };
    let summary = corpus_summary(&report);
    if report.accuracy() < CORPUS_MIN_ACCURACY || report.keyword_accuracy() < 1.0 {
        return Err(Failure { kind: "corpus_below_threshold", message: format!("accuracy {:.3}, keyword accuracy {:.3}", report.accuracy(), report.keyword_accuracy()), details: summary });
    }
    println!("{summary}");
    Ok(())
}
