//! Configuration files, custom scenarios and report reproduction.

use extrinsic_q::config::{Report, RunConfig};
use extrinsic_q::verify::suite::Suite;

fn write_temp(name: &str, text: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("extrinsic-q-config-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn minimal_file_selects_one_scenario() {
    let path = write_temp("minimal.toml", "suite = \"intrinsic\"\nscenarios = [\"FLAT_T4\"]\n");
    let plan = RunConfig::load(&path).unwrap().resolve().unwrap();
    assert_eq!(plan.scenarios.len(), 1);
    assert_eq!(plan.scenarios[0].name, "FLAT_T4");
    assert_eq!(plan.config.suite, Suite::Intrinsic);
}

#[test]
fn undefined_variable_error_is_positioned() {
    let text = r#"
suite = "intrinsic"
[[custom]]
kind = "intrinsic"
name = "bad"
vars = ["x1", "x2"]
axes = [{ lo = 0.0, hi = 6.283185307179586, periodic = true, nodes = 8 },
        { lo = 0.0, hi = 6.283185307179586, periodic = true, nodes = 8 }]
metric = [["1", "0"], ["0", "1 + 0.2*cos(x3)"]]
"#;
    let err = RunConfig::parse(text).unwrap().resolve().unwrap_err().to_string();
    assert!(err.contains("custom[0].metric[1][1]"), "{err}");
    assert!(err.contains("x3"), "{err}");
}

#[test]
fn degree_four_rejected_for_fourth_order_suites() {
    for suite in ["intrinsic", "umbilic", "critical", "invariants", "all"] {
        let c = RunConfig::parse(&format!("suite = \"{suite}\"\ndegree = 4\n")).unwrap();
        let err = c.resolve().unwrap_err().to_string();
        assert!(err.contains("requires degree ≥ 5"), "{suite}: {err}");
    }
}

#[test]
fn missing_file_is_a_config_error() {
    let err = RunConfig::load(std::path::Path::new("/nonexistent/run.toml")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/run.toml"), "{err}");
}

#[test]
fn custom_intrinsic_scenario_runs() {
    let text = r#"
suite = "intrinsic"
points = 4
pairs = 1
[[custom]]
kind = "intrinsic"
name = "warped_t2"
vars = ["x1", "x2"]
axes = [{ lo = 0.0, hi = 6.283185307179586, periodic = true, nodes = 16 },
        { lo = 0.0, hi = 6.283185307179586, periodic = true, nodes = 16 }]
metric = [["1", "0"], ["0", "exp(0.4*sin(x1))"]]
euler = 0
"#;
    let report = RunConfig::parse(text).unwrap().resolve().unwrap().run().unwrap();
    assert!(report.all_passed(), "{report:#?}");
    let checks: Vec<&str> = report.records().map(|r| r.check.as_str()).collect();
    assert!(checks.contains(&"covariance[p2]"), "{checks:?}");
    assert!(checks.contains(&"q_law[q2]"), "{checks:?}");
}

#[test]
fn report_echo_reproduces_report() {
    let text = "suite = \"extrinsic\"\nscenarios = [\"GRAPH(2)\"]\npoints = 5\npairs = 2\n";
    let first = RunConfig::parse(text).unwrap().resolve().unwrap().run().unwrap();
    let json = serde_json::to_string_pretty(&first).unwrap();
    let path = write_temp("report.json", &json);
    let second = RunConfig::load(&path).unwrap().resolve().unwrap().run().unwrap();
    assert_eq!(json, serde_json::to_string_pretty(&second).unwrap());
    let parsed: Report = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed, first);
}
