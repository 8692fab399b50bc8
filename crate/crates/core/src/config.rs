//! Run configuration: parsing, validation, execution and the JSON report.
//!
//! A configuration is TOML (or JSON) with every field optional:
//!
//! ```toml
//! suite = "intrinsic"
//! scenarios = ["FLAT_T4", "ROUND_S(4,1)"]
//! degree = 6
//! seed = 20240611
//! points = 20
//! pairs = 3
//!
//! [tolerances]
//! pointwise = 1e-7
//!
//! [params]
//! rho_coefficient = 2.0
//! ```
//!
//! Custom scenarios go in `[[custom]]` tables (see [`ScenarioDef`]) and are
//! referenced by name from `scenarios`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::MAX_DEGREE;
use crate::operators::OpParams;
use crate::scenario::{self, Scenario, ScenarioDef};
use crate::verify::suite::{group, ScenarioReport, Suite, Summary, JETS_SCENARIO, SCHEMA_VERSION};
use crate::verify::{CheckResult, Settings, Tolerances};

fn default_suite() -> Suite {
    Suite::All
}

fn default_degree() -> usize {
    Settings::default().degree
}

fn default_seed() -> u64 {
    Settings::default().seed
}

fn default_points() -> usize {
    Settings::default().points
}

fn default_pairs() -> usize {
    Settings::default().pairs
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_suite")]
    pub suite: Suite,
    /// Catalog names or names of `custom` scenarios; empty selects the
    /// suite's defaults.
    #[serde(default)]
    pub scenarios: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub custom: Vec<ScenarioDef>,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Node count for every quadrature axis; scenario defaults otherwise.
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub params: OpParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            suite: default_suite(),
            scenarios: Vec::new(),
            custom: Vec::new(),
            degree: default_degree(),
            seed: default_seed(),
            nodes: None,
            points: default_points(),
            pairs: default_pairs(),
            tolerances: Tolerances::default(),
            params: OpParams::default(),
        }
    }
}

impl RunConfig {
    /// Parses TOML, or JSON when the text starts with `{`. A JSON report is
    /// accepted too, in which case its config echo is used.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let map = |err: String, path: String| {
            Error::config(if path.is_empty() || path == "." { "<root>".into() } else { path }, err)
        };
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| map(e.to_string(), String::new()))?;
            let (value, prefix) = match value {
                serde_json::Value::Object(mut m) if m.contains_key("schema_version") => {
                    (m.remove("config").unwrap_or_default(), "config.")
                }
                v => (v, ""),
            };
            serde_path_to_error::deserialize(value).map_err(|e| {
                let path = e.path().to_string();
                let path = if path == "." { path } else { format!("{prefix}{path}") };
                map(e.into_inner().to_string(), path)
            })
        } else {
            let de = toml::Deserializer::new(text);
            serde_path_to_error::deserialize(de).map_err(|e| {
                let path = e.path().to_string();
                map(e.into_inner().message().to_string(), path)
            })
        }
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        RunConfig::parse(&text)
    }

    pub fn settings(&self) -> Settings {
        Settings {
            degree: self.degree,
            seed: self.seed,
            nodes: self.nodes,
            points: self.points,
            pairs: self.pairs,
            tol: self.tolerances,
            params: self.params,
        }
    }

    /// Checks numeric fields and the degree requirement of the suite.
    pub fn validate(&self) -> Result<()> {
        let need = self.suite.min_degree();
        if self.degree < need {
            return Err(Error::config(
                "degree",
                format!("suite `{}` requires degree ≥ {need}, got {}", self.suite, self.degree),
            ));
        }
        if self.degree > MAX_DEGREE {
            return Err(Error::config(
                "degree",
                format!("at most {MAX_DEGREE} is supported, got {}", self.degree),
            ));
        }
        if self.points == 0 {
            return Err(Error::config("points", "must be at least 1"));
        }
        if self.pairs == 0 {
            return Err(Error::config("pairs", "must be at least 1"));
        }
        if let Some(n) = self.nodes {
            if n < 2 {
                return Err(Error::config("nodes", "must be at least 2"));
            }
        }
        let tol = serde_json::to_value(self.tolerances).expect("tolerances serialize");
        for (k, v) in tol.as_object().expect("tolerances are a map") {
            let v = v.as_f64().unwrap_or(f64::NAN);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("tolerances.{k}"), "must be positive and finite"));
            }
        }
        let p = &self.params;
        for (k, v) in [
            ("rho_coefficient", p.rho_coefficient),
            ("c_laplacian_coefficient", p.c_laplacian_coefficient),
            ("umbilic_tol", p.umbilic_tol),
        ] {
            if !v.is_finite() {
                return Err(Error::config(format!("params.{k}"), "must be finite"));
            }
        }
        for (i, c) in self.custom.iter().enumerate() {
            if self.custom[..i].iter().any(|d| d.name() == c.name()) {
                return Err(Error::config(format!("custom[{i}].name"), format!("duplicate `{}`", c.name())));
            }
        }
        Ok(())
    }

    /// Validates and builds every scenario. The returned configuration has
    /// the scenario list spelled out, so it reproduces the run on its own.
    pub fn resolve(&self) -> Result<Plan> {
        self.validate()?;
        let mut config = self.clone();
        if config.scenarios.is_empty() {
            config.scenarios = if config.custom.is_empty() {
                config.suite.default_scenarios().iter().map(|s| s.to_string()).collect()
            } else {
                config.custom.iter().map(|c| c.name().to_string()).collect()
            };
        }
        let mut scenarios = Vec::new();
        for (i, name) in config.scenarios.iter().enumerate() {
            let sc = match config.custom.iter().position(|c| c.name() == name) {
                Some(k) => config.custom[k].build(&format!("custom[{k}]"))?,
                None => scenario::build(name)
                    .map_err(|e| Error::config(format!("scenarios[{i}]"), e.to_string()))?,
            };
            scenarios.push(sc);
        }
        Ok(Plan { config, scenarios })
    }
}

/// A validated run.
#[derive(Clone, Debug)]
pub struct Plan {
    pub config: RunConfig,
    pub scenarios: Vec<Scenario>,
}

/// The full report of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub suite: Suite,
    pub scenarios: Vec<ScenarioReport>,
    pub summary: Summary,
    pub config: RunConfig,
}

impl Report {
    pub fn records(&self) -> impl Iterator<Item = &CheckResult> {
        self.scenarios.iter().flat_map(|s| &s.checks)
    }

    pub fn all_passed(&self) -> bool {
        self.summary.all_passed()
    }
}

impl Plan {
    pub fn run(&self) -> Result<Report> {
        self.run_with(|_| {})
    }

    /// Runs every check, calling `on_record` as each record is produced.
    /// Sub-suites run in order, each on the plan's scenarios.
    pub fn run_with(&self, mut on_record: impl FnMut(&CheckResult)) -> Result<Report> {
        let settings = self.config.settings();
        let mut records = Vec::new();
        let mut emit = |batch: Vec<CheckResult>, records: &mut Vec<CheckResult>| {
            for r in batch {
                on_record(&r);
                records.push(r);
            }
        };
        for part in self.config.suite.parts() {
            if part == Suite::Jets {
                emit(Suite::run_jets(&settings)?, &mut records);
                continue;
            }
            for sc in &self.scenarios {
                emit(part.run_scenario(sc, &settings)?, &mut records);
            }
        }
        let summary = Summary::of(&records);
        let mut scenarios = group(records);
        // The jet checks come first regardless of the scenario order.
        scenarios.sort_by_key(|g| g.name != JETS_SCENARIO);
        Ok(Report {
            schema_version: SCHEMA_VERSION,
            suite: self.config.suite,
            scenarios,
            summary,
            config: self.config.clone(),
        })
    }
}
