//! End-to-end runs of the `vaxtender` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vaxtender::instance::builder::single;
use vaxtender::instance::instance_to_json;
use vaxtender::model::mps::parse_mps;
use vaxtender::model::{build_model, BuildOptions};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vaxtender")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn run_paths(args: &[&str], paths: &[&Path]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vaxtender"));
    cmd.args(args).env("RUST_LOG", "warn");
    for p in paths {
        cmd.arg(p);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_bundled_instances() {
    for name in ["tiny.json", "synthetic10.json", "synthetic30.json"] {
        let o = run(&["validate", "--instance", s(&data(name))]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "ok");
    }
}

#[test]
fn solve_tiny_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve", "--instance", s(&data("tiny.json")), "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "optimal");
    assert_eq!(report["schedule"]["A"], serde_json::json!([[1, 3]]));
    assert!(dir.path().join("solution.json").exists());
    assert!(std::fs::read_to_string(dir.path().join("schedule.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn antigen_without_producer_is_rejected() {
    let mut inst = single(3);
    inst.antigens.push("Orphan".into());
    inst.demand.push(vec![1.0; 3]);
    inst.initial_unvaccinated.push(0.0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("orphan.json");
    std::fs::write(&path, serde_json::to_string(&instance_to_json(&inst)).unwrap()).unwrap();
    let o = run(&["solve", "--instance", s(&path), "--out", s(&dir.path().join("out"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("Orphan"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn malformed_json_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"name\": \"x\",\n  \"antigens\": [\n}").unwrap();
    let o = run(&["validate", "--instance", s(&path)]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn tiny_time_limit_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        run(&["solve", "--instance", s(&data("synthetic30.json")), "--out", s(dir.path()), "--time-limit", "0.001"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "time_limit");
}

#[test]
fn bad_parameters_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = data("tiny.json");
    for extra in [["--time-limit", "0"], ["--gap", "-1"], ["--node-limit", "0"]] {
        let mut args = vec!["solve", "--instance", s(&tiny), "--out", s(dir.path())];
        args.extend(extra);
        assert_eq!(code(&run(&args)), 1, "{extra:?}");
    }
    assert_eq!(code(&run(&["solve", "--instance", s(&tiny)])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
}

#[test]
fn export_mps_matches_built_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tiny.mps");
    let o = run(&["export", "--instance", s(&data("tiny.json")), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let parsed = parse_mps(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let inst = vaxtender::instance::instance_from_json(&std::fs::read_to_string(data("tiny.json")).unwrap()).unwrap();
    let model = build_model(&inst, BuildOptions::default()).unwrap();
    assert_eq!(parsed.rows, model.rows);
    assert_eq!(parsed.num_columns(), model.num_columns());

    let o = run(&["export", "--instance", s(&data("tiny.json")), "--out", s(&out), "--paper-literal-coverage"]);
    assert_eq!(code(&o), 0);
    let literal = parse_mps(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_ne!(literal.rows, model.rows);
}

#[test]
fn export_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = data("tiny.json");
    let o = run(&["export", "--instance", s(&tiny), "--out", s(&dir.path().join("m.x")), "--format", "xyz"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("xyz"));
    let unwritable = dir.path().join("missing").join("deeper").join("m.mps");
    assert_eq!(code(&run(&["export", "--instance", s(&tiny), "--out", s(&unwritable)])), 1);
}

#[test]
fn forecast_two_points() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("obs.csv");
    let out = dir.path().join("fc.csv");
    std::fs::write(&input, "period,value\n1,10\n2,20\n").unwrap();
    let o =
        run_paths(&["forecast", "--alpha", "0.5", "--horizon", "2", "--input"], &[&input, Path::new("--out"), &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows, ["3,15", "4,15"]);

    std::fs::write(&input, "period,value\n").unwrap();
    assert_eq!(code(&run_paths(&["forecast", "--input"], &[&input, Path::new("--out"), &out])), 1);
}

#[test]
fn compare_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve", "--instance", s(&data("tiny.json")), "--out", s(dir.path())]);
    assert_eq!(code(&o), 0);
    let report = dir.path().join("report.json");
    let o = run_paths(&["compare"], &[&report, &report]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "1.000000");

    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"instance": "tiny", "tenders": {"A": []}}"#).unwrap();
    assert_eq!(code(&run_paths(&["compare"], &[&report, &empty])), 1);
}

#[test]
fn sweep_totals_do_not_increase() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.json");
    let o = run(&["sweep", "--instance", s(&data("synthetic10.json")), "--out", s(&out), "--betas", "0.4,1.5,6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let totals: Vec<f64> =
        v["entries"].as_array().unwrap().iter().map(|e| e["total_unvaccinated"].as_f64().unwrap()).collect();
    assert_eq!(totals.len(), 3);
    assert!(totals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6)), "{totals:?}");

    let o = run(&["sweep", "--instance", s(&data("synthetic10.json")), "--out", s(&out), "--betas", "1,-2"]);
    assert_eq!(code(&o), 1);
}
