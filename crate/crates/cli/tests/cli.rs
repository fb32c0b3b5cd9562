use std::process::{Command, Output};

use serde_json::Value;

fn bjets(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bjets")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn verify_small_range_passes() {
    let out = bjets(&["verify", "--types", "all", "--k", "2..3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["summary"]["failed"], 0);
    let total = v["summary"]["certificates"].as_u64().unwrap();
    let by_label: u64 = v["summary"]["by_label"].as_object().unwrap().values().map(|n| n.as_u64().unwrap()).sum();
    assert_eq!(total, by_label);
}

#[test]
fn bundle_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (p, jobs) in [(&a, "1"), (&b, "2")] {
        let out = bjets(&["verify", "--types", "1,7", "--k", "2..3", "--jobs", jobs, "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let (ba, bb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ba, bb);
    let v: Value = serde_json::from_slice(&ba).unwrap();
    assert_eq!(v["schema_version"], 1);
    let certs = v["certificates"].as_array().unwrap();
    assert_eq!(certs.len() as u64, v["summary"]["certificates"].as_u64().unwrap());
    let reports = v["reports"].as_array().unwrap().len() as u64;
    for c in certs {
        assert_eq!(c["passed"], true);
        if let Some(id) = c["nonfibre_report"].as_u64() {
            assert!(id < reports);
        }
    }
}

#[test]
fn table_reports_the_single_divergent_cell() {
    let out = bjets(&["table"]);
    let v = stdout_json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 10);
    assert_eq!(v["rows"][0]["max_m"], 6);
    assert_eq!(v["rows"][0]["auto_bound"], 4);
    let diff = v["diff"].as_array().unwrap();
    assert_eq!(diff.len(), 1);
    assert_eq!(diff[0]["row"], "ii");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn catalog_matches() {
    let out = bjets(&["catalog", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("matches golden copy"));
    assert!(text.contains("Z3xZ3"));
}

#[test]
fn negative_control_finds_witness() {
    let out = bjets(&["negative-control", "--class", "3,4", "--k", "2", "--types", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(v["summary"]["failed"].as_u64().unwrap() > 0);
    assert!(!v["summary"]["witnesses"].as_array().unwrap().is_empty());
    // The standard bundle yields no witness, so the control itself fails.
    let out = bjets(&["negative-control", "--class", "k+2,k+2", "--k", "2", "--types", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn lp_check_small() {
    let out = bjets(&["lp-check", "--k", "2..3", "--types", "1,2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["summary"]["disagreements"].as_array().unwrap().len(), 0);
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "types = \"2\"\nk = \"2\"\nformat = \"text\"\n").unwrap();
    let out = bjets(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("type"));
}

#[test]
fn invalid_config_gives_error_record() {
    for args in [&["verify", "--k", "1..3"][..], &["verify", "--types", "9"], &["verify", "--format", "xml"]] {
        let out = bjets(args);
        assert_eq!(out.status.code(), Some(2));
        let v: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert!(v["error"]["kind"].is_string());
    }
}
