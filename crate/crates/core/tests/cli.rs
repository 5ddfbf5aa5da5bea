use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-harmonics"))
        .args(args)
        .env_remove("RIS_HARMONICS_WORKERS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.json");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error line on stderr");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {text}"))
}

#[test]
fn pattern_prints_steering_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p");
    let res = cli(&["pattern", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert!(stdout.contains("22.02"));
    for f in ["patterns.csv", "patterns.json", "steering.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn simulate_then_estimate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"surface": {"columns": 16, "rows": 16}, "simulate": {"rx_angle_deg": -30}}"#,
    );
    let sim = dir.path().join("sim");
    assert!(
        cli(&["simulate", "--config", &cfg, "--out", sim.to_str().unwrap()])
            .status
            .success()
    );
    let est = dir.path().join("est");
    let res = cli(&[
        "estimate",
        "--config",
        &cfg,
        "--waveform",
        sim.join("waveform.csv").to_str().unwrap(),
        "--out",
        est.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(est.join("estimate.json")).unwrap()).unwrap();
    let angle = report["angle_deg"].as_f64().unwrap();
    assert!((angle + 30.0).abs() <= 3.75, "{angle}");
}

#[test]
fn invalid_config_reports_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "{\n  \"surface\": {\n    \"spacing_wavelengths\": -1\n  }\n}\n",
    );
    let res = cli(&["pattern", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(2));
    let err = stderr_json(&res);
    assert_eq!(err["error"], "config");
    assert_eq!(err["path"], "surface.spacing_wavelengths");
    assert_eq!(err["line"], 3);
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"receiver": {"windows": 4}}"#);
    let res = cli(&["pattern", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(stderr_json(&res)["error"], "config");
}

#[test]
fn usage_errors_exit_two() {
    let res = cli(&["frobnicate"]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(stderr_json(&res)["error"], "usage");
    assert!(cli(&["--help"]).status.success());
}

#[test]
fn missing_waveform_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let res = cli(&[
        "estimate",
        "--waveform",
        dir.path().join("missing.csv").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr_json(&res)["message"].is_string());
}

#[test]
fn mismatched_waveform_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"surface": {"columns": 8, "rows": 8}}"#);
    let sim = dir.path().join("sim");
    assert!(
        cli(&["simulate", "--config", &cfg, "--out", sim.to_str().unwrap()])
            .status
            .success()
    );
    // default config expects a 16-bit code
    let res = cli(&[
        "estimate",
        "--waveform",
        sim.join("waveform.csv").to_str().unwrap(),
        "--out",
        dir.path().join("est").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(stderr_json(&res)["path"], "code");
}

#[test]
fn overlapping_combs_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"scenario": {
            "kind": "multi_ris_fix",
            "surfaces": [
                {"name": "a", "position": {"x": 0, "y": 0}, "boresight_deg": 90},
                {"name": "b", "position": {"x": 8, "y": 0}, "boresight_deg": 90, "f0_offset_hz": 100}
            ],
            "user": {"x": 3, "y": 6}
        }}"#,
    );
    let res = cli(&[
        "scenario",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
    assert_eq!(stderr_json(&res)["error"], "scenario");
}

#[test]
fn sweep_output_ignores_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "surface": {"columns": 8, "rows": 8},
            "receiver": {"exclude_orders": []},
            "sweep": {"angles": {"start": -40, "stop": 40, "step": 20}, "snr_db": [0, 10], "seeds": 6}
        }"#,
    );
    let mut outputs = Vec::new();
    for workers in ["1", "4"] {
        let out = dir.path().join(format!("w{workers}"));
        let res = Command::new(env!("CARGO_BIN_EXE_ris-harmonics"))
            .args([
                "sweep",
                "--config",
                &cfg,
                "--seed",
                "21",
                "--out",
                out.to_str().unwrap(),
            ])
            .env("RIS_HARMONICS_WORKERS", workers)
            .output()
            .unwrap();
        assert!(res.status.success());
        outputs.push((
            std::fs::read(out.join("sweep.csv")).unwrap(),
            std::fs::read(out.join("sweep_summary.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn zero_workers_is_rejected() {
    let res = Command::new(env!("CARGO_BIN_EXE_ris-harmonics"))
        .arg("pattern")
        .env("RIS_HARMONICS_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn scenario_config_writes_report() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/multi_ris_fix.json");
    let dir = tempfile::tempdir().unwrap();
    let res = cli(&[
        "scenario",
        "--config",
        root.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("scenario.json")).unwrap())
            .unwrap();
    assert!(
        report["fix"]["error_m"].as_f64().unwrap()
            < report["fix"]["partition_bound_m"].as_f64().unwrap()
    );
    assert!(dir.path().join("scenario.csv").is_file());
}

#[test]
fn schema_subcommand_prints_json() {
    let res = cli(&["schema"]);
    assert!(res.status.success());
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["title"], "ExperimentConfig");
}
