//! End-to-end runs of the `extrinsic-q` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_extrinsic-q"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("extrinsic-q-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn curvature_of_unit_four_sphere() {
    let out = run(&["curvature", "--scenario", "ROUND_S(4,1)", "--point", "0.7,1.1,2.0,3.0"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!((v["j"].as_f64().unwrap() - 2.0).abs() < 1e-10);
    assert!((v["scalar"].as_f64().unwrap() - 12.0).abs() < 1e-10);
}

#[test]
fn apply_and_integrate() {
    let out = run(&["apply", "--op", "p2", "--scenario", "ROUND_S(4,1)", "--input", "1", "--point", "0.7,1.1,2.0,3.0"]);
    assert!(out.status.success());
    assert!((json(&out)["value"].as_f64().unwrap() + 2.0).abs() < 1e-10);

    let out = run(&["integrate", "--scenario", "ROUND_S(4,1)", "--op", "q4", "--nodes", "8"]);
    assert!(out.status.success());
    let total = json(&out)["integral"].as_f64().unwrap();
    let expected = 16.0 * std::f64::consts::PI.powi(2);
    assert!((total - expected).abs() < 1e-6 * expected, "{total}");
}

#[test]
fn umbilic_operator_on_graph_is_an_error() {
    let out = run(&["apply", "--op", "ext_p4_umbilic", "--scenario", "GRAPH(4)", "--input", "sin(x1)", "--point", "0.3,1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("umbilic"));
}

#[test]
fn low_degree_for_fourth_order_suite_is_an_error() {
    let out = run(&["verify", "--suite", "intrinsic", "--degree", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("requires degree ≥ 5"));
}

#[test]
fn unknown_scenario_is_an_error() {
    let out = run(&["curvature", "--scenario", "KLEIN_BOTTLE", "--point", "0,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_writes_reproducible_report() {
    let dir = temp_dir("verify");
    let first = dir.join("first.json");
    let second = dir.join("second.json");
    let out = run(&[
        "verify", "--suite", "extrinsic", "--scenario", "GRAPH(2)", "--points", "5", "--pairs", "2",
        "--quiet", "--output", first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&first).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["summary"]["failed"], 0);
    assert_eq!(report["config"]["scenarios"][0], "GRAPH(2)");

    let out = run(&["verify", "--config", first.to_str().unwrap(), "--quiet", "--output", second.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn verify_streams_json_lines_and_csv() {
    let out = run(&["verify", "--suite", "jets"]);
    assert!(out.status.success());
    let lines: Vec<serde_json::Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(lines.iter().any(|r| r["check"] == "fd_order"));
    assert!(lines.iter().all(|r| r["pass"] == true));

    let dir = temp_dir("csv");
    let path = dir.join("jets.csv");
    let out = run(&["verify", "--suite", "jets", "--format", "csv", "--quiet", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let headers = rows.headers().unwrap().clone();
    assert_eq!(&headers[1], "check");
    assert_eq!(rows.records().count(), 3);
}

#[test]
fn failing_checks_exit_with_one() {
    let out = run(&["verify", "--suite", "jets", "--tol", "fd_order=1e-9", "--quiet"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fd_order"));
}

#[test]
fn list_scenarios_names_the_catalog() {
    let out = run(&["list-scenarios"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["FLAT_T4", "ROUND_S", "SPHERE_IN_FLAT", "SLICE", "GRAPH", "CONF_PERTURBED"] {
        assert!(text.contains(name), "{name}");
    }
}
