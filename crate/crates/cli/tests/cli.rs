use std::path::Path;
use std::process::Command;

use ibbm_cli::{parse_config, Experiment};

fn ibbm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ibbm")).args(args).env_remove("BBM_THREADS").output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn documented_simulate_invocation_parses() {
    let cfg = parse_config(["ibbm", "simulate", "--gamma", "1", "--dim", "1", "--epochs", "12", "--replicates", "1000", "--seed", "7"])
        .unwrap();
    assert_eq!(cfg.experiment, Experiment::Simulate);
    assert_eq!(cfg.epochs, 12);
    assert_eq!(cfg.replicates, Some(1000));
    assert_eq!(cfg.seed, 7);
}

#[test]
fn negative_epochs_name_the_invariant() {
    let err = parse_config(["ibbm", "simulate", "--epochs", "-1"]).unwrap_err();
    assert!(format!("{err:#}").contains("max_epoch ≥ 0"), "{err:#}");
    let out = ibbm(&["simulate", "--epochs", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max_epoch ≥ 0"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cfg.json");
    std::fs::write(&file, r#"{"gamma": 2, "dim": 3, "level-n": 7}"#).unwrap();
    let cfg = parse_config(["ibbm", "simulate", "--gamma", "1", "--config", path_str(&file)]).unwrap();
    assert_eq!(cfg.gamma, 1.0);
    assert_eq!(cfg.dim, 3);
    assert_eq!(cfg.level_n, 7);
}

#[test]
fn unknown_keys_and_flags_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cfg.json");
    std::fs::write(&file, r#"{"gama": 2}"#).unwrap();
    assert!(parse_config(["ibbm", "simulate", "--config", path_str(&file)]).is_err());
    assert!(parse_config(["ibbm", "simulate", "--colour", "red"]).is_err());
    assert_eq!(ibbm(&["simulate", "--colour", "red"]).status.code(), Some(2));
}

#[test]
fn other_constraints_are_checked_at_parse_time() {
    assert!(parse_config(["ibbm", "simulate", "--dim", "0"]).is_err());
    assert!(parse_config(["ibbm", "simulate", "--dt", "2"]).is_err());
    assert!(parse_config(["ibbm", "simulate", "--sampler", "rk4"]).is_err());
    assert!(parse_config(["ibbm", "simulate", "--epochs", "30"]).is_err());
    assert!(parse_config(["ibbm", "conjecture", "--gamma", "0"]).is_err());
    assert!(parse_config(["ibbm", "conjecture", "--epochs", "5"]).is_err());
}

#[test]
fn sbm_level_below_threshold_is_rejected() {
    let err = parse_config(["ibbm", "sbm", "--alpha", "1", "--beta", "4", "--level-n", "2"]).unwrap_err();
    assert!(format!("{err:#}").contains("n > beta/(2 alpha)"), "{err:#}");
    let dir = tempfile::tempdir().unwrap();
    let out = ibbm(&["sbm", "--alpha", "1", "--beta", "4", "--level-n", "2", "--out", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("config.json").exists());
}

fn simulate_into(dir: &Path, threads: &str) {
    let out = ibbm(&[
        "simulate", "--gamma", "-0.5", "--dim", "2", "--epochs", "4", "--replicates", "6", "--seed", "11", "--mesh",
        "uniform:4", "--format", "both", "--threads", threads, "--out", path_str(dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_output_is_byte_identical_across_runs_and_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate_into(a.path(), "1");
    simulate_into(b.path(), "3");
    for name in ["snapshots.csv", "snapshots.jsonl"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let csv = std::fs::read_to_string(a.path().join("snapshots.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert_eq!(lines.next(), Some("replicate_id,t,epoch,tau,particle_id,x1,x2"));
    // per replicate: epochs 0..=4, each with 4 mesh points plus the pre-branch state
    let rows_per_rep: usize = (0..=4).map(|m| 5 << m).sum();
    assert_eq!(lines.count(), 6 * rows_per_rep);

    let echoed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(echoed["gamma"], -0.5);
    assert_eq!(echoed["experiment"], "simulate");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["metadata"]["timestamp_unix"].is_u64());
}

#[test]
fn conjecture_always_exits_zero_with_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = ibbm(&["conjecture", "--epochs", "9", "--replicates", "100", "--out", path_str(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("conjecture.json")).unwrap()).unwrap();
    assert_eq!(report["exploratory"], true);
    assert!(dir.path().join("conjecture_pairs.csv").exists());
}

#[test]
fn sbm_run_writes_series_and_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = ibbm(&[
        "sbm", "--level-n", "2", "--horizon", "2", "--mesh", "1", "--replicates", "1000", "--seed", "3", "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert!(csv.starts_with("# schema=1\nreplicate_id,t,mass,n_t,moment1,v1,capped\n"));
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sbm_reports.json")).unwrap()).unwrap();
    // extinction plus mean and orthogonality checks for N and V
    assert_eq!(reports["checks"].as_array().unwrap().len(), 5);
}

#[test]
fn validate_bbm_with_defaults_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ibbm(&["validate-bbm", "--out", path_str(dir.path())]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 9);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "pass");
    assert!(dir.path().join("reports.json").exists());
}
