use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nemx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nemx")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().expect("stderr has a line")).expect("stderr is JSON")
}

fn household(dir: &Path) -> String {
    let path = dir.join("household.json");
    fs::write(
        &path,
        r#"{"tariff": {"retail_rate": 0.4, "sell_rate": 0.2},
            "devices": [{"name": "heater", "a": 1.0, "b": 0.5, "d_max": 2.0}]}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn schedule_thresholds_classify() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = household(tmp.path());

    let out = nemx(&["thresholds", "--config", &cfg]);
    assert!(out.status.success());
    let t = stdout_json(&out);
    assert!((t["d_plus"].as_f64().unwrap() - 1.2).abs() < 1e-12);
    assert!((t["d_minus"].as_f64().unwrap() - 1.6).abs() < 1e-12);

    let out = nemx(&["schedule", "--config", &cfg, "--r", "0"]);
    assert!(out.status.success());
    let s = stdout_json(&out);
    assert_eq!(s["zone"], "net_consumption");
    assert!((s["consumption"][0].as_f64().unwrap() - 1.2).abs() < 1e-12);

    let out = nemx(&["schedule", "--config", &cfg, "--r", "1.4"]);
    let s = stdout_json(&out);
    assert_eq!(s["zone"], "net_zero");
    assert!((s["net"].as_f64().unwrap()).abs() < 1e-9);

    let out = nemx(&["schedule", "--config", &cfg, "--r", "3"]);
    assert_eq!(stdout_json(&out)["zone"], "net_production");

    let out = nemx(&["classify", "--config", &cfg]);
    assert!(out.status.success());
    let c = stdout_json(&out);
    assert_eq!(c[0]["name"], "heater");
    assert_eq!(c[0]["class"], "always_on");
}

#[test]
fn payback_output() {
    let args = ["payback", "--saving", "2500", "--install-cost", "22950", "--degradation", "0.005", "--interest", "0.024"];
    let out = nemx(&args);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["discounted"], 10);

    let out = nemx(&["payback", "--saving", "500", "--install-cost", "22950", "--degradation", "0.005", "--interest", "0.024"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["discounted"], "never");
}

#[test]
fn fixture_then_study() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = nemx(&["fixture", "--out", dir]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let config = stdout_json(&out)["config"].as_str().unwrap().to_string();

    let reports = tmp.path().join("reports");
    let out = nemx(&["study", "--config", &config, "--out", reports.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = stdout_json(&out);
    assert_eq!(s["cells"], 16);
    assert_eq!(s["infeasible_cells"], 0);
    for name in ["rates.csv", "welfare.csv", "metrics.csv", "summary.json"] {
        assert!(reports.join(name).is_file(), "{name} missing");
    }

    let out = nemx(&["rates", "--config", &config, "--gamma", "0,0.2"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out).as_array().unwrap().len(), 8);
}

#[test]
fn missing_file_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    nemx(&["fixture", "--out", dir]);
    fs::remove_file(tmp.path().join("prices.csv")).unwrap();
    let reports = tmp.path().join("reports");
    let out = nemx(&["study", "--config", tmp.path().join("study.json").to_str().unwrap(), "--out", reports.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "config");
    assert!(!reports.exists());

    let out = nemx(&["study", "--config", tmp.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_csv_is_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    nemx(&["fixture", "--out", tmp.path().to_str().unwrap()]);
    fs::write(tmp.path().join("prices.csv"), "timestamp,value\n2024-01-01T00:00:00,abc\n").unwrap();
    let reports = tmp.path().join("reports");
    let out = nemx(&["study", "--config", tmp.path().join("study.json").to_str().unwrap(), "--out", reports.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "data");
    assert!(err["error"]["message"].as_str().unwrap().contains("line 2"));
    assert!(!reports.exists());
}

#[test]
fn bad_gamma_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    nemx(&["fixture", "--out", tmp.path().to_str().unwrap()]);
    let config = tmp.path().join("study.json");
    let out = nemx(&["rates", "--config", config.to_str().unwrap(), "--gamma", "0.3,0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert!(err["error"]["message"].as_str().unwrap().contains("--gamma"), "{err}");

    let out = nemx(&["rates", "--config", config.to_str().unwrap(), "--gamma", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_household_is_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("h.json");
    fs::write(&path, r#"{"tariff": {"retail_rate": 0.1, "sell_rate": 0.2}, "devices": []}"#).unwrap();
    let out = nemx(&["thresholds", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "config");
}
