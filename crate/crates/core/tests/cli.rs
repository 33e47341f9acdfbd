use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bsflow::config::{self, ExperimentConfig};
use bsflow::runner::RunSummary;

fn bsflow(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bsflow"));
    c.args(args).env_remove("BSFLOW_THREADS");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_preset_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("relax");
    let o = bsflow(&["run", "--preset", "relax2d", "--tmax", "0.005", "--scheme", "gd", "--out", path(&out)], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.json", "diagnostics.csv", "summary.json", "interfaces.svg", "energy.svg", "interface_000000.csv", "interface_000005.vtk", "mesh_000005.vtk"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let summary: RunSummary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.steps, 5);
    assert_eq!(summary.scheme, "gd");
    assert!(summary.failure.is_none());
    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    // the written configuration carries the overrides and reloads unchanged
    let c = ExperimentConfig::from_json(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(c.t_end, 0.005);
    let mut expected = config::preset("relax2d").unwrap();
    expected.t_end = 0.005;
    expected.scheme = bsflow::assembly::Scheme::Gd;
    assert_eq!(c, expected);
}

#[test]
fn run_from_config_file_matches_preset() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config::preset("relax2d").unwrap();
    c.t_end = 0.003;
    let file = dir.path().join("c.json");
    fs::write(&file, c.to_json().unwrap()).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&bsflow(&["run", "--config", path(&file), "--out", path(&a)], &[])), 0);
    assert_eq!(code(&bsflow(&["run", "--preset", "relax2d", "--tmax", "0.003", "--out", path(&b)], &[])), 0);
    assert_eq!(fs::read(a.join("diagnostics.csv")).unwrap(), fs::read(b.join("diagnostics.csv")).unwrap());
}

#[test]
fn study_is_deterministic_across_thread_counts() {
    let args = ["study", "--preset", "expanding", "--rows", "3:1e-2", "--tmax", "0.05", "--scheme", "bgn"];
    let a = bsflow(&args, &[]);
    let b = bsflow(&args, &[("BSFLOW_THREADS", "1")]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), bsflow::runner::STUDY_HEADER);
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 6);
    assert_eq!(row[0], "3");
    assert!(row[2].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn compare_writes_both_series() {
    let dir = tempfile::tempdir().unwrap();
    let o = bsflow(&["compare", "--preset", "relax2d", "--tmax", "0.003", "--out", path(dir.path())], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("edge_ratio.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("gd,")).count(), 4);
    assert_eq!(csv.lines().filter(|l| l.starts_with("bgn,")).count(), 4);
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    assert_eq!(code(&bsflow(&["run", "--preset", "nope"], &[])), 1);
    assert_eq!(code(&bsflow(&["study", "--rows", "3-1e-2"], &[])), 1);
    assert_eq!(code(&bsflow(&["study", "--preset", "rising2d", "--rows", "3:1e-2"], &[])), 1);
    assert_eq!(code(&bsflow(&["run"], &[])), 1);
    assert_eq!(code(&bsflow(&["presets"], &[("BSFLOW_THREADS", "zero")])), 1);
    assert_eq!(code(&bsflow(&["--help"], &[])), 0);
}

#[test]
fn geometric_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config::preset("relax2d").unwrap();
    // interface leaves the domain
    c.initial.center = [0.8, 0.0];
    let file = dir.path().join("c.json");
    fs::write(&file, c.to_json().unwrap()).unwrap();
    let o = bsflow(&["run", "--config", path(&file), "--out", path(&dir.path().join("o"))], &[]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn solver_failure_exits_with_three_and_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config::preset("relax2d").unwrap();
    c.disc.solver_tol = 1e-300;
    c.t_end = 0.003;
    let file = dir.path().join("c.json");
    fs::write(&file, c.to_json().unwrap()).unwrap();
    let out = dir.path().join("o");
    let o = bsflow(&["run", "--config", path(&file), "--out", path(&out)], &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("failure_state.bin").exists());
    let summary: RunSummary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary.failure.unwrap().contains("residual"));
}
