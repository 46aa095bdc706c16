use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const FIXTURE: &str = "[domain]\ndisk_level = 2\n\n[media]\na1 = 1 0 1\nsigma1 = 1\na2 = 1 0 1\nsigma2 = 4\n\n[solver]\nt_max = 60\n";

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.ini");
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], config: Option<&Path>, out: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_translab"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["trace"], None, dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[domain]\ndisk_level = 2\n\n[media]\nsigma1 = 1\nsigma2 = oops\n");
    let out = run(&["trace"], Some(&config), &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 6"), "{stderr}");
}

#[test]
fn zero_threads_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), FIXTURE);
    let out = Command::new(env!("CARGO_BIN_EXE_translab"))
        .args(["trace", "--threads", "0", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn trace_writes_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), FIXTURE);
    let out_dir = dir.path().join("o");
    let out = run(&["trace"], Some(&config), &out_dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(out_dir.join("trace.json"));
    assert_eq!(report["pass"], Value::Bool(true));
    assert!(report["report"]["rel_gap"].as_f64().unwrap() <= 1e-8);
    let manifest = json(out_dir.join("trace_manifest.json"));
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["config_hash"], report["config_hash"]);
    assert!(manifest["outputs"].as_array().unwrap().iter().any(|o| o == "trace.json"));
}

#[test]
fn check_flags_equal_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), FIXTURE);
    let out_dir = dir.path().join("o");
    let out = run(&["check"], Some(&config), &out_dir);
    assert_eq!(out.status.code(), Some(1));
    let report = json(out_dir.join("check.json"));
    assert_eq!(report["failed"], serde_json::json!(["complementing"]));

    let equal = write_config(dir.path(), &FIXTURE.replace("sigma2 = 4", "sigma2 = 1"));
    let out = run(&["check"], Some(&equal), &dir.path().join("q"));
    assert_eq!(out.status.code(), Some(1));
    let failed = json(dir.path().join("q/check.json"))["failed"].clone();
    assert!(failed.as_array().unwrap().iter().any(|f| f == "jump"), "{failed}");

    let admissible = write_config(dir.path(), &FIXTURE.replace("a2 = 1 0 1", "a2 = 2 0 2"));
    let out = run(&["check"], Some(&admissible), &dir.path().join("p"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_needs_scalar_equal_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), FIXTURE);
    let out_dir = dir.path().join("o");
    assert_eq!(run(&["oracle"], Some(&config), &out_dir).status.code(), Some(0));
    let csv = fs::read_to_string(out_dir.join("oracle.csv")).unwrap();
    let first = csv.lines().nth(2).unwrap();
    assert!(first.starts_with("1,2.90260805"), "{first}");

    let anisotropic = write_config(dir.path(), &FIXTURE.replace("a2 = 1 0 1", "a2 = 2 0 1"));
    assert_eq!(run(&["oracle"], Some(&anisotropic), &dir.path().join("p")).status.code(), Some(2));
}

#[test]
fn eigs_and_weyl_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), FIXTURE);
    let out_dir = dir.path().join("o");
    assert_eq!(run(&["eigs"], Some(&config), &out_dir).status.code(), Some(0));
    let eigs = json(out_dir.join("eigs.json"));
    assert_eq!(eigs["zero_eigenvalue"], Value::Bool(true));
    assert!(eigs["total"].as_u64().unwrap() > 10);

    run(&["weyl"], Some(&config), &out_dir);
    let weyl = json(out_dir.join("weyl.json"));
    assert!((weyl["c_analytic"].as_f64().unwrap() - 1.25).abs() < 0.05);
    assert!(weyl["c_fit"].is_number());
}

#[test]
fn seed_changes_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), FIXTURE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&["mesh"], Some(&config), &a);
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_translab"));
    cmd.args(["mesh", "--seed", "99", "--config"]).arg(&config).arg("--out").arg(&b);
    assert!(cmd.output().unwrap().status.success());
    let (ha, hb) = (json(a.join("mesh.json"))["config_hash"].clone(), json(b.join("mesh.json"))["config_hash"].clone());
    assert_ne!(ha, hb);
}

#[test]
fn variable_media_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let radial = FIXTURE.replace("a2 = 1 0 1", "a2_kind = radial\na2 = 2 0 2  0.5 0 0.5");
    let config = write_config(dir.path(), &radial);
    let out = run(&["trace"], Some(&config), &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    fs::write(dir.path().join("sigma.txt"), "1\n2\n3\n").unwrap();
    let table = FIXTURE.replace("sigma2 = 4", "sigma2_kind = table\nsigma2 = sigma.txt");
    let config = write_config(dir.path(), &table);
    let out = run(&["check"], Some(&config), &dir.path().join("p"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma2"));
}
