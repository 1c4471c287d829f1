use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn depol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depol")).args(args).env("RUST_LOG", "off").output().unwrap()
}

fn cfg(name: &str) -> String {
    configs().join(name).to_str().unwrap().to_string()
}

#[test]
fn algebra_check_exit_codes() {
    let ok = depol(&["algebra-check", "--n-max", "4"]);
    assert_eq!(ok.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!(report["commutator"].as_f64().unwrap() <= 1e-12);
    assert_eq!(depol(&["algebra-check", "--n-max", "0"]).status.code(), Some(0));
    assert_eq!(depol(&["algebra-check", "--n-max", "2", "--inject-fault"]).status.code(), Some(1));
    assert_ne!(depol(&["algebra-check", "--n-max", "40"]).status.code(), Some(0));
}

#[test]
fn evolve_writes_parseable_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = depol(&["evolve", "-c", &cfg("mixed_blocks.json"), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,s0,s1,s2,s3,dop,purity"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 41);
    let s0 = rows[0][1];
    for r in &rows {
        assert_eq!(r.len(), 7);
        assert!((r[1] - s0).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&r[5]));
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let blocks = summary["final_blocks"].as_array().unwrap();
    assert!((blocks[0]["purity"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((blocks[1]["purity"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(summary["predictions"]["s3"].as_f64(), Some(16.0));
}

#[test]
fn sphere_reports_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let out = depol(&["sphere", "-c", &cfg("su2_coherent.json"), "-o", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("multipoles.json")).unwrap()).unwrap();
    assert!(report["max_discrepancy"].as_f64().unwrap() <= 1e-8);
    let q = std::fs::read_to_string(dir.path().join("q_N4_t012.csv")).unwrap();
    assert!(q.starts_with("theta,phi,q\n"));
}

#[test]
fn calibrate_synthetic_and_degenerate() {
    let out = depol(&["calibrate", "-c", &cfg("scenario.json"), "--synthetic"]);
    assert_eq!(out.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((r["k2"].as_f64().unwrap() - 8.0).abs() < 1e-9);
    assert!((r["k1"].as_f64().unwrap() - 4.0).abs() < 1e-9);

    let dir = tempfile::tempdir().unwrap();
    let vacuum = dir.path().join("vacuum.json");
    std::fs::write(
        &vacuum,
        r#"{"rates": {"gamma": 1.0, "gamma0": 1.0}, "n_max": 0, "initial_state": {"type": "fock", "n": 0, "k": 0},
            "time_grid": {"kind": "linear", "t_min": 0.0, "t_max": 1.0, "points": 8}}"#,
    )
    .unwrap();
    assert_eq!(depol(&["calibrate", "-c", vacuum.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn micro_validate_flags_near_resonance() {
    let out = depol(&["micro-validate", "-c", &cfg("micro_near_resonant.json")]);
    assert_eq!(out.status.code(), Some(2));
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["dispersive"], serde_json::Value::Bool(false));
}

#[test]
fn parse_errors_name_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"rates\": {\"gamma\": 1.0, \"gamma0\": 0.0},\n  \"time_grid\": {\"kind\": \"cubic\"}\n}\n").unwrap();
    let out = depol(&["evolve", "-c", bad.to_str().unwrap(), "-o", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("time_grid.kind") && err.contains("line 3"), "{err}");
}
