use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use serde_json::json;
use sobodecay_harness::output::{json_number, verdicts_json, write_json};
use sobodecay_harness::plot::emit_plot;
use sobodecay_harness::runner::{run_path, HarnessError, RunOptions, DEFAULT_OUT_ROOT, OUT_ENV};
use sobodecay_harness::suites::{expand, run_suite};

#[derive(Parser)]
#[command(name = "sobodecay", version, about = "Decay experiments and acceptance suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct RunFlags {
    /// Output root (overrides SOBODECAY_OUT; a config's out_dir wins).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace an existing result directory.
    #[arg(long)]
    force: bool,
    /// Leave wall-clock time out of the record for byte-identical reruns.
    #[arg(long)]
    reference: bool,
}

impl RunFlags {
    fn options(&self) -> RunOptions {
        RunOptions {
            out_root: self.out.clone(),
            force: self.force,
            reference: self.reference,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run every `*.cfg` file in a directory.
    Batch {
        dir: PathBuf,
        /// Number of configs run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Plot one quantity of a finished run as SVG.
    Plot {
        run_id: String,
        quantity: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an acceptance suite, or `all`.
    Verify {
        suite: String,
        /// Also write the claims of every criterion as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn report(path: &Path, result: &Result<sobodecay_harness::runner::RunSummary, HarnessError>) -> i32 {
    match result {
        Ok(s) => {
            match &s.error {
                Some(e) => println!("{}: {} {} ({e})", path.display(), s.status.as_str(), s.dir.display()),
                None => println!("{}: {} {}", path.display(), s.status.as_str(), s.dir.display()),
            }
            s.status.exit_code()
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            e.exit_code()
        }
    }
}

/// Batch exit code: config errors dominate, then failures, then inconclusive.
fn combine(codes: &[i32]) -> i32 {
    [2, 1, 3].into_iter().find(|c| codes.contains(c)).unwrap_or(0)
}

fn batch(dir: &Path, jobs: usize, opts: &RunOptions) -> i32 {
    let mut configs: Vec<PathBuf> = match std::fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
            .collect(),
        Err(e) => {
            eprintln!("{}: {e}", dir.display());
            return 2;
        }
    };
    configs.sort();
    if configs.is_empty() {
        eprintln!("{}: no *.cfg files", dir.display());
        return 2;
    }
    let queue = Mutex::new(configs.into_iter().enumerate().collect::<Vec<_>>());
    let results = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1) {
            scope.spawn(|| loop {
                let Some((i, path)) = queue.lock().unwrap().pop() else { break };
                let r = run_path(&path, opts);
                results.lock().unwrap().push((i, path, r));
            });
        }
    });
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|r| r.0);
    let codes: Vec<i32> = results.iter().map(|(_, p, r)| report(p, r)).collect();
    combine(&codes)
}

fn verify(suite: &str, json_out: Option<&Path>) -> i32 {
    let Some(names) = expand(suite) else {
        eprintln!("unknown suite `{suite}`");
        return 2;
    };
    let mut all_pass = true;
    let mut records = Vec::new();
    for name in names {
        let c = run_suite(name).expect("suite names come from the registry");
        println!("{}", c.summary_line());
        all_pass &= c.passed();
        records.push(json!({
            "criterion": c.name,
            "passed": c.passed(),
            "seconds": json_number(c.seconds),
            "budget_seconds": json_number(c.budget),
            "error": c.error,
            "claims": verdicts_json(&c.claims),
        }));
    }
    if let Some(path) = json_out {
        if let Err(e) = write_json(path, &serde_json::Value::Array(records)) {
            eprintln!("{}: {e}", path.display());
            return 1;
        }
    }
    if all_pass {
        0
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, flags } => {
            let r = run_path(&config, &flags.options());
            code(report(&config, &r))
        }
        Command::Batch { dir, jobs, flags } => code(batch(&dir, jobs, &flags.options())),
        Command::Plot { run_id, quantity, out } => {
            let root = out
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
            match emit_plot(&root.join(&run_id), &quantity) {
                Ok(p) => {
                    println!("{}", p.display());
                    code(0)
                }
                Err(e) => {
                    eprintln!("{e}");
                    code(2)
                }
            }
        }
        Command::Verify { suite, json } => code(verify(&suite, json.as_deref())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sobodecay_harness::runner::RunStatus;

    #[test]
    fn batch_codes_follow_precedence() {
        assert_eq!(combine(&[0, 3, 0]), 3);
        assert_eq!(combine(&[3, 1]), 1);
        assert_eq!(combine(&[1, 2]), 2);
        assert_eq!(combine(&[0, 0]), 0);
        assert_eq!(RunStatus::Inconclusive.exit_code(), 3);
    }
}
