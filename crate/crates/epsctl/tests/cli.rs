//! End-to-end tests of the command-line contract: exit codes, file
//! formats, determinism, and the version string.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_epsctl"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("epsctl-cli-{}-{}", tag, std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const SCALAR_LTI: &str = r#"{"kind":"lti","A":[[0.5]],"B":[[1.0]],"C":[[1.0]]}"#;

const SCALAR_SF: &str = r#"{
  "kind": "state_feedback",
  "A": [[0.5]], "B": [[1.0]], "Bw": [[1.0]], "C": [[1.0]], "D": [[0.0]]
}"#;

#[test]
fn version_mentions_rng() {
    let out = run(bin().arg("--version"));
    let text = stdout_of(&out);
    assert!(text.contains("epsctl"));
    assert!(text.contains("rng: chacha8"), "version line: {}", text);
    assert!(text.contains(epskit::RNG_ID));
}

#[test]
fn analyze_optimize_scalar() {
    let dir = tmp_dir("analyze");
    let file = write(&dir, "scalar.json", SCALAR_LTI);
    let out = run(bin().args(["analyze"]).arg(&file).args(["--optimize", "--json"]));
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let value = report["results"]["eps_norm"].as_f64().unwrap();
    let alpha_star = report["results"]["alpha_star"].as_f64().unwrap();
    assert!((value - 2.0).abs() <= 1e-6);
    assert!((alpha_star - 0.5).abs() <= 1e-4);
    // report is self-contained
    assert!(report["input_digest"].as_str().unwrap().starts_with("fnv1a64:"));
    assert!(report["version"].as_str().is_some());
    assert_eq!(report["rng"].as_str().unwrap(), "chacha8");
}

#[test]
fn analyze_alpha_out_of_range_exits_3() {
    let dir = tmp_dir("alpha-range");
    let file = write(&dir, "scalar.json", SCALAR_LTI);
    let out = run(bin().args(["analyze"]).arg(&file).args(["--alpha", "0.1"]));
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_of(&out);
    assert!(err.contains("AlphaOutOfRange"), "stderr: {}", err);
    assert!(err.contains("0.25") && err.contains("1"), "admissible interval missing: {}", err);
    assert_eq!(err.lines().count(), 1, "one machine-parsable line expected");
}

#[test]
fn analyze_sweep_writes_feasible_curve() {
    let dir = tmp_dir("sweep");
    let file = write(&dir, "scalar.json", SCALAR_LTI);
    let csv_path = dir.join("curve.csv");
    let out = run(bin()
        .args(["analyze"])
        .arg(&file)
        .args(["--sweep", "0.26:0.99:74", "--out"])
        .arg(&csv_path));
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "alpha,eps_alpha_norm,feasible");
    assert_eq!(lines.len(), 75);
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
}

#[test]
fn analyze_unstable_system_exits_3() {
    let dir = tmp_dir("unstable");
    let file = write(&dir, "u.json", r#"{"kind":"lti","A":[[1.0]],"B":[[1.0]],"C":[[1.0]]}"#);
    let out = run(bin().args(["analyze"]).arg(&file).args(["--optimize"]));
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("UnstableSystem"));
}

#[test]
fn synth_scalar_state_feedback_fixed_alpha() {
    let dir = tmp_dir("synth-sf");
    let file = write(&dir, "sf.json", SCALAR_SF);
    let out_path = dir.join("gains.json");
    let out = run(bin()
        .args(["synth"])
        .arg(&file)
        .args(["--mode", "state-feedback", "--alpha", "0.5", "--out"])
        .arg(&out_path));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let k = doc["K"][0][0].as_f64().unwrap();
    assert!((k - (-0.5)).abs() <= 1e-9, "K = {}", k);
    let norm = doc["eps_alpha_norm"].as_f64().unwrap();
    assert!((norm - 2.0f64.sqrt()).abs() <= 1e-9, "norm = {}", norm);
    assert!(doc["L"].is_null());
    assert!(doc["Q"].is_array());
}

#[test]
fn synth_missing_field_exits_2_and_names_it() {
    let dir = tmp_dir("missing");
    let file = write(
        &dir,
        "of.json",
        r#"{"kind":"output_feedback","A":[[0.5]],"B1":[[1.0]],"C1":[[1.0]],"D1":[[0.0]],"C2":[[1.0]],"D2":[[0.0]]}"#,
    );
    let out = run(bin().args(["synth"]).arg(&file).args(["--mode", "output-feedback"]));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("B2"), "stderr: {}", stderr_of(&out));
}

#[test]
fn synth_wrong_kind_exits_3() {
    let dir = tmp_dir("wrong-kind");
    let file = write(&dir, "scalar.json", SCALAR_LTI);
    let out = run(bin().args(["synth"]).arg(&file).args(["--mode", "observer"]));
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_of(&out).contains("WrongKind"));
}

#[test]
fn simulate_constant_converges_to_fixed_point() {
    let dir = tmp_dir("sim-const");
    let file = write(
        &dir,
        "scalar.json",
        r#"{"kind":"lti","A":[[0.5]],"B":[[1.0]],"C":[[1.0]],"alpha":0.5}"#,
    );
    let prefix = dir.join("run");
    let out = run(bin()
        .args(["simulate"])
        .arg(&file)
        .args(["--steps", "100", "--dist", "constant", "--out"])
        .arg(&prefix));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let csv = std::fs::read_to_string(dir.join("run.traj.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let x_last: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((x_last - 2.0).abs() < 1e-6, "x converged to {}", x_last);
    // no ellipse file for a 1-state system
    assert!(!dir.join("run.ellipse.csv").exists());
}

#[test]
fn simulate_same_seed_byte_identical() {
    let dir = tmp_dir("sim-det");
    let file = write(
        &dir,
        "scalar.json",
        r#"{"kind":"lti","A":[[0.5]],"B":[[1.0]],"C":[[1.0]],"alpha":0.5}"#,
    );
    let mut csvs = Vec::new();
    for tag in ["a", "b"] {
        let prefix = dir.join(tag);
        let out = run(bin()
            .args(["simulate"])
            .arg(&file)
            .args(["--steps", "500", "--dist", "ball", "--seed", "7", "--runs", "3", "--out"])
            .arg(&prefix));
        assert!(out.status.success());
        csvs.push(std::fs::read(dir.join(format!("{}.traj.csv", tag))).unwrap());
    }
    assert_eq!(csvs[0], csvs[1], "same seed must give byte-identical CSVs");
}

#[test]
fn simulate_synth_output_roundtrip_and_strict() {
    let dir = tmp_dir("sim-synth");
    let gains = dir.join("gains.json");
    let out = run(bin()
        .args(["synth"])
        .arg(common::example_plant_path())
        .args(["--mode", "output-feedback", "--optimize", "--out"])
        .arg(&gains));
    assert!(out.status.success());

    let prefix = dir.join("sim");
    let out = run(bin()
        .args(["simulate"])
        .arg(&gains)
        .args(["--steps", "2000", "--dist", "extreme", "--runs", "4", "--strict", "--out"])
        .arg(&prefix)
        .env("EPSCTL_THREADS", "2"));
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("violations = 0"));
    let ellipse = std::fs::read_to_string(dir.join("sim.ellipse.csv")).unwrap();
    assert_eq!(ellipse.lines().next().unwrap(), "px,py");
    assert_eq!(ellipse.lines().count(), 361);
}

#[test]
fn system_file_round_trip_bit_identical() {
    // parse -> serialize -> parse gives the same matrices, bit for bit
    let text = std::fs::read_to_string(common::example_plant_path()).unwrap();
    let first = epsctl::systemfile::parse_system_file(&text).unwrap();
    let plant = match first.system {
        epsctl::systemfile::ParsedSystem::OutputFeedback(ref p) => p.clone(),
        _ => panic!(),
    };
    let raw = epsctl::systemfile::RawSystemFile {
        kind: "output_feedback".into(),
        a: Some(epsctl::systemfile::matrix_to_rows(&plant.a)),
        b1: Some(epsctl::systemfile::matrix_to_rows(&plant.b1)),
        b2: Some(epsctl::systemfile::matrix_to_rows(&plant.b2)),
        c1: Some(epsctl::systemfile::matrix_to_rows(&plant.c1)),
        d1: Some(epsctl::systemfile::matrix_to_rows(&plant.d1)),
        c2: Some(epsctl::systemfile::matrix_to_rows(&plant.c2)),
        d2: Some(epsctl::systemfile::matrix_to_rows(&plant.d2)),
        ..Default::default()
    };
    let second = epsctl::systemfile::parse_system_file(&serde_json::to_string(&raw).unwrap()).unwrap();
    match second.system {
        epsctl::systemfile::ParsedSystem::OutputFeedback(p2) => {
            assert_eq!(plant.a, p2.a);
            assert_eq!(plant.b1, p2.b1);
            assert_eq!(plant.b2, p2.b2);
            assert_eq!(plant.c1, p2.c1);
            assert_eq!(plant.d1, p2.d1);
            assert_eq!(plant.c2, p2.c2);
            assert_eq!(plant.d2, p2.d2);
        }
        _ => panic!(),
    }
}

#[test]
fn reference_comparison_is_display_only() {
    let out = run(bin()
        .args(["synth"])
        .arg(common::example_plant_path())
        .args(["--mode", "output-feedback", "--optimize", "--compare-reference"]));
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("299"), "literature value shown: {}", text);
    assert!(text.contains("241.2"), "computed value shown: {}", text);
}
