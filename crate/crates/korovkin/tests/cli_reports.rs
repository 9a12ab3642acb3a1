//! End-to-end tests of the binary: flag handling, config-file merging,
//! report files, exit codes, and error JSON.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use korovkin::{p_transform, NodeTable};
use korovkin::operators::node;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_korovkin"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small but complete verify config, fast enough to run repeatedly.
fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(
        &path,
        r#"{
  "matrix": "c1",
  "operator": "tn",
  "m": 2,
  "un": "squares:2",
  "f": "f1",
  "n_max": 30,
  "j_schedule": [25, 100, 400],
  "r": 0.5,
  "epsilon": 0.1,
  "p_max": 0.99,
  "grid_points": 32,
  "seed": 7,
  "workers", 1,
  "pair_samples": 2000
}"#,
    )
    .unwrap();
    path
}

#[test]
fn verify_with_config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    // Write a valid config (the helper above is exercised for the broken
    // JSON case separately).
    let cfg_path = dir.path().join("config.json");
    fs::write(
        &cfg_path,
        r#"{"n_max": 30, "j_schedule": [25, 100, 400], "grid_points": 32, "pair_samples": 2000, "seed": 7}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("reports");
    let out = run(&[
        "verify",
        "--config",
        cfg_path.to_str().unwrap(),
        "--seed",
        "11",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("verification PASS"), "stdout: {text}");
    for file in ["errors.csv", "densities.csv", "summary.json"] {
        assert!(out_dir.join(file).is_file(), "{file} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    // Flag overrides the config file; unspecified fields keep defaults.
    assert_eq!(summary["config"]["seed"], 11);
    assert_eq!(summary["config"]["n_max"], 30);
    assert_eq!(summary["config"]["matrix"], "c1");
    assert_eq!(summary["outcome"]["all_pass"], true);

    let errors = fs::read_to_string(out_dir.join("errors.csv")).unwrap();
    let header = errors.lines().next().unwrap();
    assert_eq!(header, "n,err_f0,err_f1,err_f2,err_f3,err_target,bound_2_7");
    assert_eq!(errors.lines().count(), 31);
    let densities = fs::read_to_string(out_dir.join("densities.csv")).unwrap();
    assert_eq!(
        densities.lines().next().unwrap(),
        "j,tail_D,tail_D1,tail_D2,tail_D3,tail_D4"
    );
}

#[test]
fn verify_rejects_malformed_config_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_config(dir.path()); // contains a deliberate syntax error
    let out = run(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("config"));
}

#[test]
fn verify_rejects_unknown_config_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    fs::write(&path, r#"{"nmax": 30}"#).unwrap();
    let out = run(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "unknown field must be rejected");
    assert!(stderr(&out).contains("nmax"));
}

#[test]
fn verify_runs_a_tabulated_target_file() {
    let dir = tempfile::tempdir().unwrap();
    // Tabulate f(x, y) = p(x) p(y) on the n = 16 lattice and hand the
    // file to --f with the classical operator.
    let n = 16;
    let mut values = Vec::new();
    for kx in 0..=n {
        for ky in 0..=n {
            values.push(p_transform(node(n, kx).unwrap()) * p_transform(node(n, ky).unwrap()));
        }
    }
    let table_path = dir.path().join("target.nodes");
    fs::write(
        &table_path,
        NodeTable::new(2, n, values).unwrap().to_text(),
    )
    .unwrap();
    let out_dir = dir.path().join("reports");
    let out = run(&[
        "verify",
        "--operator",
        "bbh",
        "--f",
        table_path.to_str().unwrap(),
        "--nmax",
        "25",
        "--jschedule",
        "25,100,400",
        "--grid-points",
        "32",
        "--pair-samples",
        "2000",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stdout: {} stderr: {}",
        stdout(&out),
        stderr(&out)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert!(summary["target"].as_str().unwrap().contains("node table"));
}

#[test]
fn verify_reports_computation_errors_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // An epsilon this small defeats the delta search: no radius on the
    // ladder keeps the modulus below it.
    let out = run(&[
        "verify",
        "--epsilon",
        "1e-9",
        "--nmax",
        "5",
        "--grid-points",
        "16",
        "--pair-samples",
        "100",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
    let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(err["error"]["kind"], "computation");
}

#[test]
fn unknown_names_exit_2_with_config_kind() {
    for args in [
        vec!["verify", "--matrix", "borel"],
        vec!["verify", "--operator", "szasz"],
        vec!["verify", "--f", "f9"],
        vec!["transform", "--sequence", "fibonacci"],
        vec!["regularity", "--matrix", "norlund"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}");
        let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
        assert_eq!(err["error"]["kind"], "config", "args {args:?}");
    }
}

#[test]
fn transform_prints_exact_deterministic_table() {
    let out = run(&[
        "transform",
        "--matrix",
        "c1",
        "--sequence",
        "squares:2",
        "--jschedule",
        "100,400,2500,10000",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let again = stdout(&run(&[
        "transform",
        "--matrix",
        "c1",
        "--sequence",
        "squares:2",
        "--jschedule",
        "100,400,2500,10000",
    ]));
    assert_eq!(text, again, "transform output must be deterministic");
    // Spiked C1 means 1 + (#squares <= j)/j: 1.1, 1.05, 1.02, 1.01.
    for (j, want) in [(100, 1.1f64), (400, 1.05), (2500, 1.02), (10_000, 1.01)] {
        let line = text
            .lines()
            .find(|l| l.starts_with(&format!("{j},")))
            .unwrap_or_else(|| panic!("no row for j={j} in {text}"));
        let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((value - want).abs() <= 1e-12, "row {j}: {value} vs {want}");
    }
}

#[test]
fn regularity_identity_fails_with_exit_1_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "regularity",
        "--matrix",
        "identity",
        "--jschedule",
        "10,100,1000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("max entry -> 0: FAIL"), "stdout: {text}");
    assert!(text.contains("row sums -> 1: OK"));
    let doc: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("regularity.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(doc["report"]["max_entry_ok"], false);
    assert_eq!(doc["report"]["row_sums_ok"], true);
}

#[test]
fn demo_counterexample_passes_with_default_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["demo-counterexample", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("A-statistical convergence: DECAYING; classical convergence: FAILS"),
        "stdout: {text}"
    );
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["spike_count"], 14);
    assert_eq!(summary["witness_trend"], "DECAYING");
}

#[test]
fn demo_rejects_identity_spike() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "demo-counterexample",
        "--spike",
        "1.0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("divergent perturbation"));
}

#[test]
fn verify_csv_bytes_are_identical_across_reruns() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "verify".to_string(),
            "--nmax".into(),
            "20".into(),
            "--jschedule".into(),
            "25,100,400".into(),
            "--grid-points".into(),
            "32".into(),
            "--pair-samples".into(),
            "2000".into(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let a = bin().args(args(dir_a.path())).output().unwrap();
    let b = bin()
        .args(args(dir_b.path()))
        .arg("--workers")
        .arg("4")
        .output()
        .unwrap();
    assert!(
        a.status.success() && b.status.success(),
        "a: {} b: {}",
        stdout(&a),
        stdout(&b)
    );
    assert_eq!(
        fs::read(dir_a.path().join("errors.csv")).unwrap(),
        fs::read(dir_b.path().join("errors.csv")).unwrap()
    );
    assert_eq!(
        fs::read(dir_a.path().join("densities.csv")).unwrap(),
        fs::read(dir_b.path().join("densities.csv")).unwrap()
    );
}
