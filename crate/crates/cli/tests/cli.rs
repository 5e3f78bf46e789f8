use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn memoryflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memoryflow")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    memoryflow(&all)
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn manifest(dir: &Path, command: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{command}.manifest.json"))).unwrap()).unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(memoryflow(&["--help"]).status.code(), Some(0));
    assert_eq!(memoryflow(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(memoryflow(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run_in(tmp.path(), &["walk", "--preset", "fig9"]).status.code(), Some(1));
    assert_eq!(run_in(tmp.path(), &["walk", "--config", "/nonexistent/run.json"]).status.code(), Some(1));

    let cfg = write_config(tmp.path(), r#"{"steps": 3, "colour": 1}"#);
    let out = run_in(tmp.path(), &["walk", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let cfg = write_config(tmp.path(), r#"{"eta": 1.5}"#);
    let out = run_in(tmp.path(), &["controlled-qubit", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta"));
}

#[test]
fn unwritable_output_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = run_in(&blocker.join("sub"), &["walk", "--steps", "2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn csv_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cases: [(&[&str], &str, &str); 6] = [
        (&["dephasing", "--preset", "fig1"], "dephasing_A1.csv", "t,abs_kappa"),
        (&["dephasing", "--preset", "fig1"], "spectrum_A0.csv", "omega,density"),
        (
            &["controlled-qubit", "--steps", "3"],
            "controlled_qubit.csv",
            "A,dt_omega_dn,eta,step,r1_x,r1_y,r1_z,r2_x,r2_y,r2_z,D,delta,N",
        ),
        (&["strong-limit-error", "--steps", "3"], "strong_limit_error.csv", "A,dt_omega_dn,eta,step,error"),
        (&["walk", "--steps", "3"], "walk.csv", "step,x,probability"),
        (&["open-walk-nm", "--steps", "3"], "open_walk_nm.csv", "A,dt_omega_dn,N10,mode"),
    ];
    for (args, file, expected) in cases {
        let out = run_in(d, args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(header(&d.join(file)), expected);
    }
}

#[test]
fn walk_amplitude_columns_and_cross_check() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"steps": 6, "amplitudes": true, "cross_check": true}"#);
    let out = run_in(tmp.path(), &["walk", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(header(&tmp.path().join("walk.csv")), "step,x,probability,cl_re,cl_im,cr_re,cr_im");
    let m = manifest(tmp.path(), "walk");
    assert_eq!(m["summary"]["integral_cross_check"]["pass"], Value::Bool(true));
}

#[test]
fn manifest_records_resolved_config_and_derived_scales() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["strong-limit-error", "--preset", "fig5"]);
    assert_eq!(out.status.code(), Some(0));
    let m = manifest(tmp.path(), "strong-limit-error");
    assert_eq!(m["command"], "strong-limit-error");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["config"]["preset"], "fig5");
    assert_eq!(m["config"]["steps"], 15);
    let derived = m["derived"].as_array().unwrap();
    assert_eq!(derived.len(), 2);
    assert_eq!(derived[0]["dt_omega_dn"], 0.02);
    assert!((derived[0]["period_over_sigma"].as_f64().unwrap() - 9.0 / 0.02).abs() < 1e-9);
    assert_eq!(m["outputs"][0], "strong_limit_error.csv");
}

#[test]
fn precedence_preset_then_file_then_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"steps": 7, "engine": "quadrature"}"#);
    run_in(tmp.path(), &["strong-limit-error", "--preset", "fig5", "--config", &cfg]);
    let m = manifest(tmp.path(), "strong-limit-error");
    assert_eq!(m["config"]["steps"], 7);
    assert_eq!(m["config"]["engine"], "quadrature");
    assert_eq!(m["config"]["eta"].as_array().unwrap().len(), 5);

    run_in(tmp.path(), &["strong-limit-error", "--preset", "fig5", "--config", &cfg, "--steps", "4", "--engine", "series"]);
    let m = manifest(tmp.path(), "strong-limit-error");
    assert_eq!(m["config"]["steps"], 4);
    assert_eq!(m["config"]["engine"], "series");
}

#[test]
fn oracle_default_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["oracle"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("oracle.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 6);
    for c in checks {
        for key in ["name", "max_dev", "tol", "pass"] {
            assert!(c.get(key).is_some(), "missing {key} in {c}");
        }
        assert_eq!(c["pass"], Value::Bool(true), "{c}");
    }
}

#[test]
fn oracle_reports_perturbation_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"oracle": {"perturb_filter": 1e-6, "frequencies": [8]}}"#);
    let out = run_in(tmp.path(), &["oracle", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("oracle.json")).unwrap()).unwrap();
    let failed: Vec<&Value> = report["checks"].as_array().unwrap().iter().filter(|c| c["pass"] == false).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0]["name"].as_str().unwrap().starts_with("dilation_vs_filter"));
    assert!(failed[0]["location"].as_str().unwrap().contains("x=0,L"));
}

#[test]
fn oracle_skips_oversized_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"oracle": {"frequencies": [8, 100000]}}"#);
    let out = run_in(tmp.path(), &["oracle", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("oracle.json")).unwrap()).unwrap();
    let skipped: Vec<&Value> =
        report["checks"].as_array().unwrap().iter().filter(|c| c["pass"].is_null()).collect();
    assert_eq!(skipped.len(), 1);
    assert!(skipped[0]["reason"].as_str().unwrap().contains("resource"));
}

#[test]
fn scan_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"steps": 6, "scan": {"resolution": 2, "random_directions": 5}}"#);
    let read = |seed: &str| {
        run_in(tmp.path(), &["scan", "--config", &cfg, "--seed", seed]);
        fs::read(tmp.path().join("scan.csv")).unwrap()
    };
    let a = read("3");
    assert_eq!(a, read("3"));
    assert_ne!(a, read("4"));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let one = tempfile::tempdir().unwrap();
    let many = tempfile::tempdir().unwrap();
    for (dir, threads) in [(one.path(), "1"), (many.path(), "6")] {
        let out = run_in(dir, &["controlled-qubit", "--preset", "fig5", "--threads", threads]);
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["controlled_qubit.csv", "controlled-qubit.manifest.json"] {
        assert_eq!(fs::read(one.path().join(name)).unwrap(), fs::read(many.path().join(name)).unwrap(), "{name}");
    }
}
