//! Runs one configured experiment into a write-once result directory.
//!
//! Layout of `<out_root>/<run_id>/`: `config.txt`, `trajectories.csv`,
//! `verdicts.json`, `record.json`. `record.json` is written last, so its
//! presence marks a finished run.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use sobodecay::fit::{overall, Verdict};

use crate::config::{ExperimentConfig, ConfigError};
use crate::experiments::{execute, Outcome};
use crate::output::{json_number, sha256_file, sha256_hex, verdicts_json, write_json, CsvSink};

pub const VERSION_TAG: &str = concat!("sobodecay ", env!("CARGO_PKG_VERSION"));

pub const DEFAULT_OUT_ROOT: &str = "runs";

/// Environment variable overriding the default output root.
pub const OUT_ENV: &str = "SOBODECAY_OUT";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output root from the command line; the config's `out_dir` wins.
    pub out_root: Option<PathBuf>,
    /// Replace an existing result directory instead of refusing.
    pub force: bool,
    /// Omit wall-clock time from `record.json` so identical configs give
    /// byte-identical records.
    pub reference: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Pass,
    Fail,
    Inconclusive,
    /// The experiment aborted with a numerical or contract error.
    Error,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Pass => "pass",
            RunStatus::Fail => "fail",
            RunStatus::Inconclusive => "inconclusive",
            RunStatus::Error => "error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Pass => 0,
            RunStatus::Fail | RunStatus::Error => 1,
            RunStatus::Inconclusive => 3,
        }
    }

    pub fn from_verdict(v: Verdict) -> Self {
        match v {
            Verdict::Pass => RunStatus::Pass,
            Verdict::Fail => RunStatus::Fail,
            Verdict::Inconclusive => RunStatus::Inconclusive,
        }
    }
}

/// Failures that prevent a run directory from being produced at all.
#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    /// The result directory exists and `force` was not given.
    Exists(PathBuf),
    Io(PathBuf, io::Error),
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "config error: {e}"),
            HarnessError::Exists(p) => {
                write!(f, "{} already exists; pass --force to replace it", p.display())
            }
            HarnessError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl HarnessError {
    /// Config and usage errors exit with 2, everything else with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Exists(_) => 2,
            HarnessError::Io(..) => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run_id: String,
    pub dir: PathBuf,
    pub status: RunStatus,
    pub error: Option<String>,
}

/// First 16 hex digits of the SHA-256 of the version tag and canonical config.
pub fn run_id(cfg: &ExperimentConfig) -> String {
    let text = format!("{VERSION_TAG}\n{}", cfg.canonical_text());
    sha256_hex(text.as_bytes())[..16].to_string()
}

pub fn resolve_out_root(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    if let Some(dir) = cfg.string("out_dir") {
        return PathBuf::from(dir);
    }
    if let Some(dir) = &opts.out_root {
        return dir.clone();
    }
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT))
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io(path.to_path_buf(), e)
}

pub fn run_config(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary, HarnessError> {
    let id = run_id(cfg);
    let dir = resolve_out_root(cfg, opts).join(&id);
    if dir.exists() {
        if !opts.force {
            return Err(HarnessError::Exists(dir));
        }
        fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
    }
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let config_path = dir.join("config.txt");
    fs::write(&config_path, cfg.canonical_text()).map_err(io_err(&config_path))?;

    let started = Instant::now();
    let (outcome, error) = match execute(cfg) {
        Ok(o) => (o, None),
        Err(e) => (Outcome::default(), Some(e.to_string())),
    };
    let elapsed = started.elapsed().as_secs_f64();
    let aborted = outcome.events.iter().find(|(_, kind, _)| kind == "fatal").map(|e| e.2.clone());
    let error = error.or(aborted);

    let csv_path = dir.join("trajectories.csv");
    let mut sink = CsvSink::create(&csv_path).map_err(io_err(&csv_path))?;
    for traj in &outcome.trajectories {
        sink.write(traj).map_err(io_err(&csv_path))?;
    }
    drop(sink);

    let verdict_path = dir.join("verdicts.json");
    write_json(&verdict_path, &verdicts_json(&outcome.claims)).map_err(io_err(&verdict_path))?;

    let status = if error.is_some() {
        RunStatus::Error
    } else {
        RunStatus::from_verdict(overall(&outcome.claims))
    };

    let mut files = serde_json::Map::new();
    for name in ["config.txt", "trajectories.csv", "verdicts.json"] {
        let p = dir.join(name);
        files.insert(name.to_string(), json!(sha256_file(&p).map_err(io_err(&p))?));
    }
    let config: serde_json::Map<String, Value> = cfg
        .entries()
        .map(|(k, v)| (k.to_string(), Value::String(v.canonical())))
        .collect();
    let record = json!({
        "run_id": id,
        "version": VERSION_TAG,
        "kind": cfg.kind.as_str(),
        "status": status.as_str(),
        "error": error,
        "config": config,
        "files": files,
        "predictions": outcome.predictions.iter().map(|p| json!({
            "quantity": p.quantity,
            "exponent": json_number(p.exponent),
            "window": [json_number(p.window[0]), json_number(p.window[1])],
        })).collect::<Vec<_>>(),
        "events": outcome.events.iter().map(|(t, kind, detail)| json!({
            "t": json_number(*t),
            "kind": kind,
            "detail": detail,
        })).collect::<Vec<_>>(),
        "wall_clock_seconds": if opts.reference { Value::Null } else { json_number(elapsed) },
    });
    let record_path = dir.join("record.json");
    write_json(&record_path, &record).map_err(io_err(&record_path))?;

    Ok(RunSummary {
        run_id: id,
        dir,
        status,
        error,
    })
}

pub fn run_path(path: &Path, opts: &RunOptions) -> Result<RunSummary, HarnessError> {
    let cfg = crate::config::parse_config(path)?;
    run_config(&cfg, opts)
}
