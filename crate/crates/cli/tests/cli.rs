use std::path::Path;
use std::process::{Command, Output};

fn fks(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fks"))
        .args(args)
        .current_dir(dir)
        .env("FKS_LOG", "quiet")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, model: &str, kind: &str, t_end: f64) {
    let text = format!(
        r#"{{
            "model": {model},
            "grid": {{"d": 1, "n": 32}},
            "solver": {{"dt": 0.01, "t_end": {t_end}}},
            "initial_data": {{"kind": "{kind}", "amplitude": 0.2}},
            "outputs": {{"trajectory_csv_path": "{name}.csv", "certificates_ndjson_path": "{name}.ndjson"}}
        }}"#
    );
    std::fs::write(dir.join(format!("{name}.json")), text).unwrap();
}

const DEMO_MODEL: &str = r#"{"d": 1, "alpha": 1.0, "chi": 1.0, "r": 0.6, "eps": 0.1}"#;

#[test]
fn constants_report_sharp_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = fks(
        &["constants", "--d", "1", "--alpha", "1", "--chi", "1", "--r", "0.6", "--eps", "0.1"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"P_sharp\": 1"), "{text}");
    assert!(text.contains("\"M1_sharp\": 0.6366197723675814"), "{text}");
}

#[test]
fn oracle_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = fks(&["oracle-check", "--d", "1", "--alpha", "1", "--n", "256", "--seed", "7"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn constant_run_has_zero_oscillation() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "flat", DEMO_MODEL, "constant", 1.0);
    let out = fks(&["run", "flat.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(dir.path().join("flat.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,L1,Lp,L2,Linf,Halpha2,min_u,osc,v_min,v_max,env_L1,env_Lp,env_Linf,flags"
    );
    for line in lines {
        let osc: f64 = line.split(',').nth(7).unwrap().parse().unwrap();
        assert_eq!(osc, 0.0);
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "bad", DEMO_MODEL, "constant", 1.0);
    let path = dir.path().join("bad.json");
    let text = std::fs::read_to_string(&path).unwrap().replace("\"t_end\"", "\"colour\": 1, \"t_end\"");
    std::fs::write(&path, text).unwrap();
    let out = fks(&["run", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn subcritical_run_is_gated_not_failed() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "sub", r#"{"d": 1, "alpha": 0.3, "chi": 1.0, "r": 0.1}"#, "perturbed_one", 0.5);
    let out = fks(&["run", "sub.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let nd = std::fs::read_to_string(dir.path().join("sub.ndjson")).unwrap();
    let thm1: serde_json::Value = nd
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|v| v["claim_id"] == "THM1_LINF")
        .unwrap();
    assert_eq!(thm1["status"], "outside_hypotheses");
    assert!(std::fs::read_to_string(dir.path().join("sub.csv")).unwrap().lines().count() > 10);
}

#[test]
fn lemmas_write_one_line_per_inequality() {
    let dir = tempfile::tempdir().unwrap();
    let out = fks(&["lemmas", "--count", "5", "--seed", "1", "--s", "1", "--delta", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().all(|l| l.contains("\"status\":\"pass\"")), "{text}");
}

#[test]
fn twin_study_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "a", r#"{"d": 1, "alpha": 1.5, "chi": 1.0, "r": 0.6, "eps": 0.1}"#, "perturbed_one", 0.2);
    let out = fks(&["twin", "a.json", "--dts", "0.004,0.002,0.001"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["certificate"]["status"], "pass");

    let out = fks(&["twin", "a.json", "a.json"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0.0000000000000000e0")), "{text}");

    let base = std::fs::read_to_string(dir.path().join("a.json")).unwrap();
    let spec = format!(r#"{{"base": {base}, "chi": [1.0, 2.0], "out_dir": "sweep"}}"#);
    std::fs::write(dir.path().join("spec.json"), spec).unwrap();
    let out = fks(&["sweep", "spec.json", "--jobs", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let summary = std::fs::read_to_string(dir.path().join("sweep/sweep.ndjson")).unwrap();
    assert_eq!(summary.lines().count(), 2);
}
