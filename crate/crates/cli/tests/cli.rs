use std::path::Path;
use std::process::{Command, Output};

use slamsim::pose_sources::SensorProfile;

fn slamsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slamsim")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const STEPS: &str = r#"{"seed": 1, "reference": {"type": "steps", "axes": ["x"], "hold_time": 8, "repetitions": 1}}"#;

#[test]
fn run_then_recompute_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "steps.json", STEPS);
    let out_dir = dir.path().join("out");
    let run = slamsim(&["run", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let table = String::from_utf8(run.stdout).unwrap();
    assert!(table.contains("IAE") || table.contains("iae"), "{table}");
    for f in ["run.csv", "metrics.csv", "streams/estimate.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }

    let recomputed = dir.path().join("again.csv");
    let metrics = slamsim(&[
        "metrics",
        out_dir.join("run.csv").to_str().unwrap(),
        "--out",
        recomputed.to_str().unwrap(),
    ]);
    assert!(metrics.status.success());
    assert_eq!(std::fs::read(out_dir.join("metrics.csv")).unwrap(), std::fs::read(recomputed).unwrap());
}

#[test]
fn list_profiles_prints_builtins() {
    let out = slamsim(&["list-profiles"]);
    assert!(out.status.success());
    let profiles: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = profiles.as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["carto-like", "loam-like"]);
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "bad.json", r#"{"sensor": "no-such-profile"}"#);
    let out = slamsim(&["run", &config]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let typo = write(dir.path(), "typo.json", r#"{"sede": 3}"#);
    assert_eq!(slamsim(&["run", &typo]).status.code(), Some(1));
    assert_eq!(slamsim(&["metrics", "/nonexistent/run.csv"]).status.code(), Some(1));
}

#[test]
fn diverged_run_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{"sensor": {profile}, "reference": {{"type": "steps", "hover": [0, 0, 6], "axes": ["x"], "hold_time": 8, "repetitions": 1}}}}"#,
        profile = serde_json::to_string(&SensorProfile {
            name: "broken".into(),
            degradation_slope: f64::MAX,
            ..SensorProfile::carto_like()
        })
        .unwrap(),
    );
    let config = write(dir.path(), "diverge.json", &body);
    let out = slamsim(&["run", &config]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}
