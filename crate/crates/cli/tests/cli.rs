use std::io::Write;
use std::process::{Command, Output, Stdio};

fn georiesz(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_georiesz"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn coeffs_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = r#"{"d": 2, "potential": {"kind": "geodesic_power", "delta": 0.5, "epsilon": 0.0}, "order": 16}"#;
    let o = georiesz(&["coeffs", "--out", out.to_str().unwrap(), "--quiet"], cfg);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("coeffs.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["experiment"], "coeffs");
    let csv = std::fs::read_to_string(out.join("coeffs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 18);
}

#[test]
fn report_goes_to_stdout_without_out_dir() {
    let cfg = r#"{"d": 2, "kind": "fibonacci", "n_points": 10}"#;
    let o = georiesz(&["gen", "--quiet"], cfg);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["experiment"], "gen");
}

#[test]
fn config_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.json");
    std::fs::write(&path, r#"{"d": 1, "kind": "equal_spaced_circle", "n_points": 5}"#).unwrap();
    let o = georiesz(&["gen", "--config", path.to_str().unwrap(), "--quiet"], "");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn unknown_keys_and_domain_errors_exit_two() {
    let unknown = r#"{"d": 2, "potential": {"kind": "geodesic_power", "delta": 0.5, "epsilon": 0.0}, "order": 4, "extra": 1}"#;
    assert_eq!(georiesz(&["coeffs"], unknown).status.code(), Some(2));
    let nonintegrable = r#"{"d": 2, "potential": {"kind": "geodesic_power", "delta": -2.5, "epsilon": 0.0}, "order": 4}"#;
    assert_eq!(georiesz(&["coeffs"], nonintegrable).status.code(), Some(2));
    assert_eq!(georiesz(&["coeffs"], "not json").status.code(), Some(2));
}

#[test]
fn failed_checks_exit_one() {
    // the decay slope of delta = 0.5 on S^2 is -2.5, so an expectation of 0 must fail
    let cfg = r#"{"cases": [{"d": 2, "potential": {"kind": "geodesic_power", "delta": 0.5, "epsilon": 0.0}, "expected": 0.0}]}"#;
    let o = georiesz(&["decay", "--quiet"], cfg);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], false);
}
