use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sobodecay(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sobodecay"))
        .args(args)
        .current_dir(dir)
        .env_remove("SOBODECAY_OUT")
        .output()
        .expect("spawn sobodecay")
}

fn only_run_dir(root: &Path) -> std::path::PathBuf {
    let mut dirs: Vec<_> = std::fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1);
    dirs.pop().unwrap()
}

const HEAT: &str = "kind = heat
grid.n = 16
grid.L = 6.283185307179586
s = 1.4
ell_list = 0, 1, 2
times.start = 1
times.stop = 10000
times.count = 61
";

#[test]
fn heat_gaussian_run_passes_and_refuses_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("heat.cfg"), HEAT).unwrap();
    let out = sobodecay(tmp.path(), &["run", "heat.cfg", "--out", "runs"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let dir = only_run_dir(&tmp.path().join("runs"));
    let verdicts: Value = serde_json::from_slice(&std::fs::read(dir.join("verdicts.json")).unwrap()).unwrap();
    let rate = verdicts
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["claim_id"] == "decay_rate[ell=0,s=1.4]")
        .unwrap();
    assert_eq!(rate["verdict"], "pass");
    assert!((rate["measured"].as_f64().unwrap() + 0.75).abs() <= 0.02);
    let csv = std::fs::read_to_string(dir.join("trajectories.csv")).unwrap();
    assert!(csv.starts_with("t,quantity,label,value,flag\n"));
    assert!(!csv.contains('\r'));

    let again = sobodecay(tmp.path(), &["run", "heat.cfg", "--out", "runs"]);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    let forced = sobodecay(tmp.path(), &["run", "heat.cfg", "--out", "runs", "--force"]);
    assert_eq!(forced.status.code(), Some(0));

    let run_id = dir.file_name().unwrap().to_str().unwrap();
    let plot = sobodecay(tmp.path(), &["plot", run_id, "grad_norm[ell=1]", "--out", "runs"]);
    assert_eq!(plot.status.code(), Some(0), "{}", String::from_utf8_lossy(&plot.stderr));
    let svg = std::fs::read_to_string(dir.join("plot_grad_norm_ell_1_.svg")).unwrap();
    assert!(svg.contains("predicted slope -1.250000"));
    let missing = sobodecay(tmp.path(), &["plot", run_id, "nope", "--out", "runs"]);
    assert_ne!(missing.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("available: grad_norm[ell=0]"));
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.cfg"), "kind = cns\ns = 1.6\n").unwrap();
    let out = sobodecay(tmp.path(), &["run", "bad.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("requires s<3/2"), "{err}");
    assert_eq!(sobodecay(tmp.path(), &["verify", "nonsense"]).status.code(), Some(2));
}

#[test]
fn batch_runs_each_config_once() {
    let tmp = tempfile::tempdir().unwrap();
    let cfgs = tmp.path().join("cfgs");
    std::fs::create_dir(&cfgs).unwrap();
    std::fs::write(cfgs.join("a.cfg"), "kind = kinetic\n").unwrap();
    std::fs::write(cfgs.join("b.cfg"), "kind = cns\ncns.initial = equilibrium\ngrid.n = 8\ncns.t_final = 0.2\n").unwrap();
    std::fs::write(cfgs.join("notes.txt"), "ignored").unwrap();
    let out = sobodecay(tmp.path(), &["batch", "cfgs", "--jobs", "2", "--out", "runs", "--reference"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(std::fs::read_dir(tmp.path().join("runs")).unwrap().count(), 2);
    for entry in std::fs::read_dir(tmp.path().join("runs")).unwrap() {
        let rec: Value = serde_json::from_slice(&std::fs::read(entry.unwrap().path().join("record.json")).unwrap()).unwrap();
        assert_eq!(rec["status"], "pass");
        assert!(rec["wall_clock_seconds"].is_null());
    }
}
