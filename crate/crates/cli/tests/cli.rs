//! End-to-end runs of the `conetrace` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const HALF: &str = r#"{"operator": {"m": 2, "coeff": [[[0.25, 0]], [[0, 0]], [[1, 0]]]}}"#;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conetrace"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn conetrace")
}

fn with_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn result(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice::<Value>(&o.stdout).unwrap()["result"].clone()
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["analyze"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["transmogrify", "--config", "x.json"], dir.path()).status.code(), Some(2));
    let bad = with_config(dir.path(), r#"{"operator": {"m": 2, "coeff": [[[1, 0]]]}, "colour": 3}"#);
    assert_eq!(run(&["analyze", "--config", &bad], dir.path()).status.code(), Some(2));
    let broken = with_config(dir.path(), "{ not json");
    assert_eq!(run(&["analyze", "--config", &broken], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["analyze", "--config", "/nonexistent.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn json_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_config(dir.path(), HALF);
    let a = run(&["domains", "--config", &cfg], dir.path());
    let b = run(&["domains", "--config", &cfg], dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["library_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(std::fs::read(dir.path().join("domains.json")).unwrap(), a.stdout);
}

#[test]
fn analyze_reports_domain_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let half = result(&run(&["analyze", "--config", &with_config(dir.path(), HALF)], dir.path()));
    assert_eq!(half["d"], 2);
    let three_halves = r#"{"operator": {"m": 2, "coeff": [[[2.25, 0]], [[0, 0]], [[1, 0]]]}, "domain": {"preset": "min"}}"#;
    let v = result(&run(&["analyze", "--config", &with_config(dir.path(), three_halves)], dir.path()));
    assert_eq!(v["d"], 0);
    assert!(v["notes"].as_array().unwrap().iter().any(|n| n == "D_min = D_max"));
}

#[test]
fn domain_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let robin = r#"{"operator": {"m": 2, "coeff": [[[0.25, 0]], [[0, 0]], [[1, 0]]]},
        "domain": {"columns": [[[1, 0], [1, 0]]], "label": "robin",
                   "compare": [{"columns": [[[0, 0], [1, 0]]], "label": "span{x^-1/2}"}]}}"#;
    let v = result(&run(&["domains", "--config", &with_config(dir.path(), robin)], dir.path()));
    assert_eq!(v["friedrichs"]["verdict"], "stationary");
    let verdicts: Vec<(&str, &str)> = v["configured"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| (d["label"].as_str().unwrap(), d["verdict"].as_str().unwrap()))
        .collect();
    assert_eq!(verdicts, [("robin", "nonstationary"), ("span{x^-1/2}", "stationary")]);
}

#[test]
fn trace_ray_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"operator": {"m": 2, "coeff": [[[0.25, 0]], [[0, 0]], [[1, 0]]]},
        "ray": {"r_min": 1, "r_max": 10, "points": 2}}"#;
    let o = run(&["trace-ray", "--config", &with_config(dir.path(), cfg)], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,re_value,im_value,error_estimate,method"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    // eigenvalues (kπ)², so Tr (A + 1)^{-1} = (coth 1 - 1)/2
    let exact = (1f64.cosh() / 1f64.sinh() - 1.0) / 2.0;
    assert!((row[1].parse::<f64>().unwrap() - exact).abs() < 1e-9, "{row:?}");
    assert_eq!(row[4], "green");
}
