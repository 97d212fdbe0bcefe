use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_whittaker-daha"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/a1_verify_all.json")
}

#[test]
fn poly_prints_canonical_text() {
    let o = bin().args(["poly", "--kind", "barP", "--weight", "-2"]).output().unwrap();
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "X^2 + X^-2 + 1 + q");
    let o = bin().args(["poly", "--kind", "E", "--weight", "0"]).output().unwrap();
    assert_eq!(stdout(&o).trim(), "1");
}

#[test]
fn poly_rejects_weight_outside_box() {
    let o = bin().args(["poly", "--kind", "barP", "--weight", "-3", "--box", "2"]).output().unwrap();
    assert!(!o.status.success());
}

#[test]
fn rank_one_suite_passes_and_is_deterministic() {
    let run = || bin().args(["run", "--config"]).arg(config_path()).args(["--format", "json"]).output().unwrap();
    let (a, b) = (run(), run());
    assert!(a.status.success(), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["summary"]["failed"], 0);
    let entries = report["entries"].as_array().unwrap();
    let ids: Vec<&str> = entries.iter().map(|e| e["identity_id"].as_str().unwrap()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(ids, sorted, "entries are sorted and unique");
    assert!(entries.iter().all(|e| e["paper_anchor"] != "unmapped"));
    for id in ["growthex", "sigma_limit", "bfunceq", "mehjackxxx", "shintq", "LfLaWa1"] {
        assert!(ids.contains(&id), "{id} missing");
    }
}

#[test]
fn unsupported_toda_is_skipped() {
    let o = bin().args(["run", "--type", "G", "--rank", "2", "--lattice", "Q", "--task", "verify_toda"]).output().unwrap();
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let entries = report["entries"].as_array().unwrap();
    let minuscule = entries.iter().find(|e| e["identity_id"] == "LfLaW").unwrap();
    assert!(minuscule["status"].as_str().unwrap().starts_with("skipped: unsupported"));
}

#[test]
fn compute_bar_emits_polynomials() {
    let o = bin().args(["run", "--type", "A", "--rank", "2", "--task", "compute_bar", "--box", "2"]).output().unwrap();
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let polys = report["polynomials"].as_array().unwrap();
    assert_eq!(polys.iter().filter(|p| p["kind"] == "barP").count(), 9);
    assert_eq!(polys.iter().filter(|p| p["kind"] == "barE").count(), 25);
}

#[test]
fn invalid_config_is_a_usage_error() {
    let o = bin().args(["run", "--config"]).arg(config_path()).args(["--box", "-1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["run", "--type", "A", "--rank", "1", "--task", "verify_asymptotics"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
