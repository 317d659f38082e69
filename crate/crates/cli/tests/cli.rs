use std::path::Path;
use std::process::{Command, Output};

fn rotcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotcd")).args(args).output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn lhz_run_is_byte_identical_across_reruns() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = rotcd(&["run", "--model", "lhz", "--n-logical", "4", "--seed", "7", "--protocols", "ua", "--out", dir.path().to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["run.json", "fields_ua.csv", "fidelity_ua.csv"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    assert!(!a.path().join("params_ra.csv").exists());
}

#[test]
fn two_spin_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = rotcd(&["run", "--model", "two-spin", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    for p in ["ua", "local-cd", "ra"] {
        let fid = read(dir.path(), &format!("fidelity_{p}.csv"));
        assert_eq!(fid.lines().next().unwrap(), "t,lambda,F,F_tilde");
        assert_eq!(fid.lines().count(), 102);
        assert!(read(dir.path(), &format!("fields_{p}.csv")).starts_with("t,"));
    }
    let params = read(dir.path(), "params_ra.csv");
    assert_eq!(params.lines().next().unwrap(), "t,beta,gamma");
    assert_eq!(params.lines().count(), 102);
    // at least 12 significant digits
    let field = params.lines().nth(50).unwrap().split(',').nth(1).unwrap();
    let mantissa = field.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
    assert!(mantissa.len() >= 12, "{field}");

    let meta: serde_json::Value = serde_json::from_str(&read(dir.path(), "run.json")).unwrap();
    assert_eq!(meta["config"]["m_points"], 100);
    assert_eq!(meta["config"]["steps"], 2000);
    assert_eq!(meta["backend"], "closed-form");
    assert!(meta["tolerances"]["bfgs_gtol"].is_number());
    let f_ra = meta["final_fidelity"]["ra"]["F"].as_f64().unwrap();
    assert!(f_ra >= 0.999, "{f_ra}");
}

#[test]
fn params_include_phi_for_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = rotcd(&["run", "--model", "chain", "--n", "4", "--protocols", "ra", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(dir.path(), "params_ra.csv").lines().next().unwrap(), "t,beta,gamma,phi");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"model": "qubo", "n": 3, "tau": 2.0, "seed": 5, "protocols": ["ua"]}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = rotcd(&["run", "--config", cfg.to_str().unwrap(), "--tau", "0.5", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value = serde_json::from_str(&read(&out_dir, "run.json")).unwrap();
    assert_eq!(meta["config"]["tau"], 0.5);
    assert_eq!(meta["config"]["seed"], 5);
    assert_eq!(meta["config"]["model"], "qubo");
}

#[test]
fn scaling_writes_summary_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = rotcd(&[
        "scaling", "--model", "qubo", "--sizes", "3,4", "--instances", "2", "--protocols", "ra", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "scaling.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "size,protocol,mean_F,p25_F,p75_F,mean_rel_improvement");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!((rows[0][0], rows[0][1]), ("3", "ua"));
    assert_eq!(rows[0][5].parse::<f64>().unwrap(), 1.0);
    assert!(read(dir.path(), "run.json").contains("\"scaling\""));
}

#[test]
fn invalid_input_fails_with_message() {
    let missing = rotcd(&["run", "--model", "chain"]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--n"));

    let bad = rotcd(&["run", "--model", "qubo", "--n", "3", "--protocols", "bogus"]);
    assert!(!bad.status.success());

    let too_big = rotcd(&["run", "--model", "qubo", "--n", "9", "--protocols", "exact-cd"]);
    assert!(!too_big.status.success());
    assert!(String::from_utf8_lossy(&too_big.stderr).contains("exact"));

    let steps = rotcd(&["run", "--model", "two-spin", "--steps", "10"]);
    assert!(!steps.status.success());
}

#[test]
fn validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = rotcd(&["validate", "--out", dir.path().to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 6);
    let reports: serde_json::Value = serde_json::from_str(&read(dir.path(), "validation.json")).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 6);
}
