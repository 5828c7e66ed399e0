//! Smoke tests for the command-line interface: exit codes, artifacts, and
//! the bundled scenario files.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_viscofix"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

#[test]
fn validate_accepts_all_bundled_scenarios() {
    let files = [
        "proj-interval-explicit.toml",
        "vip-interval.toml",
        "resolvent-curve.toml",
        "toy-certificate.toml",
        "compare-interval.toml",
    ];
    let mut cmd = bin();
    cmd.arg("validate");
    for f in files {
        cmd.arg(scenario(f));
    }
    let out = cmd.output().expect("spawn viscofix");
    assert!(
        out.status.success(),
        "validate failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches(": ok").count(), files.len());
}

#[test]
fn run_emits_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("run")
        .arg(scenario("toy-certificate.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .expect("spawn viscofix");
    assert!(
        out.status.success(),
        "run failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("toy-certificate_trace.csv").exists());
    assert!(dir.path().join("toy-certificate_report.json").exists());
    let report: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("toy-certificate_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["name"], "toy-certificate");
    assert_eq!(report["seed"], 0);
}

#[test]
fn certify_toy_scenario_passes() {
    let out = bin()
        .arg("certify")
        .arg(scenario("toy-certificate.toml"))
        .arg("--budget")
        .arg("1000")
        .output()
        .expect("spawn viscofix");
    assert!(
        out.status.success(),
        "certify failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let certs = report["certificates"].as_array().unwrap();
    assert!(!certs.is_empty());
    assert!(certs
        .iter()
        .any(|c| c["verdict"]["verdict"] == "pass"));
}

#[test]
fn compare_prints_table() {
    let out = bin()
        .arg("compare")
        .arg(scenario("compare-interval.toml"))
        .output()
        .expect("spawn viscofix");
    assert!(
        out.status.success(),
        "compare failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(table["rows"].as_array().unwrap().is_empty(), false);
}

#[test]
fn malformed_scenario_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"broken\"\nunknown_key = 1\n").unwrap();
    let out = bin().arg("run").arg(&bad).output().expect("spawn viscofix");
    assert_eq!(out.status.code(), Some(1));
}
