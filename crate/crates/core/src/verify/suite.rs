//! Named groups of checks and the report they produce.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{Op, QSpec};
use crate::scenario::Scenario;

use super::checks::*;
use super::{fd_order, polynomial_partials, product_rule, CheckResult, Settings};

/// Scenario name under which the jet-engine checks are reported.
pub const JETS_SCENARIO: &str = "jets";

/// Report schema version.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Jets,
    Structural,
    Intrinsic,
    Audit,
    Extrinsic,
    Umbilic,
    Critical,
    Invariants,
    All,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Jets,
        Suite::Structural,
        Suite::Intrinsic,
        Suite::Audit,
        Suite::Extrinsic,
        Suite::Umbilic,
        Suite::Critical,
        Suite::Invariants,
        Suite::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Jets => "jets",
            Suite::Structural => "structural",
            Suite::Intrinsic => "intrinsic",
            Suite::Audit => "audit",
            Suite::Extrinsic => "extrinsic",
            Suite::Umbilic => "umbilic",
            Suite::Critical => "critical",
            Suite::Invariants => "invariants",
            Suite::All => "all",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Suite::Jets => "jet derivatives against exact and finite-difference oracles",
            Suite::Structural => "Bianchi, trace and conformal weight identities",
            Suite::Intrinsic => "P2/P4 covariance, Q2/Q4 laws, self-adjointness, Gauss-Bonnet",
            Suite::Audit => "Q4 |rho|^2 coefficient and C Laplacian coefficient audits",
            Suite::Extrinsic => "extrinsic P2/P3 covariance and Q2/Q3 laws",
            Suite::Umbilic => "umbilic reductions, the umbilic Q4 law and the normal-derivative identity",
            Suite::Critical => "critical P4 covariance, P4(1) = 0, self-adjointness",
            Suite::Invariants => "global invariance of the total Q4 integrand and divergence integrals",
            Suite::All => "every suite on its default scenarios",
        }
    }

    /// The suites run by this one.
    pub fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::ALL[..8].to_vec(),
            s => vec![s],
        }
    }

    /// Smallest jet degree the suite accepts: the highest operator order
    /// plus one.
    pub fn min_degree(self) -> usize {
        match self {
            Suite::Jets => 2,
            Suite::Structural => 3,
            Suite::Extrinsic => 4,
            _ => 5,
        }
    }

    pub fn default_scenarios(self) -> Vec<&'static str> {
        match self {
            Suite::Jets => vec![],
            Suite::Structural => vec![
                "TWISTED_T(3)",
                "TWISTED_T(4)",
                "ROUND_S(4,1)",
                "SPHERE_IN_FLAT(3,1)",
                "SLICE(S2xS2)",
                "GRAPH(3)",
                "GRAPH(4)",
            ],
            Suite::Intrinsic => vec![
                "FLAT_T4",
                "FLAT_T(2)",
                "TWISTED_T(2)",
                "TWISTED_T(3)",
                "TWISTED_T(4)",
                "TWISTED_T(5)",
                "ROUND_S(2,1)",
                "ROUND_S(3,1)",
                "ROUND_S(4,1)",
                "CONF_PERTURBED(ROUND_S(4,1))",
            ],
            Suite::Audit => vec!["ROUND_S(4,1)", "TWISTED_T(4)", "TWISTED_T(5)", "GRAPH(4)"],
            Suite::Extrinsic => vec!["GRAPH(2)", "GRAPH(3)", "GRAPH(4)", "SPHERE_IN_FLAT(3,1)"],
            Suite::Umbilic => vec![
                "SPHERE_IN_FLAT(3,1)",
                "SPHERE_IN_FLAT(4,2)",
                "SLICE(S2xS2)",
                "SLICE(PS3)",
            ],
            Suite::Critical => vec!["GRAPH(4)", "SLICE(S2xS2)"],
            Suite::Invariants => vec!["SLICE(S2xS2)", "GRAPH(4)"],
            Suite::All => {
                let mut out: Vec<&'static str> = Vec::new();
                for s in Suite::All.parts() {
                    for name in s.default_scenarios() {
                        if !out.contains(&name) {
                            out.push(name);
                        }
                    }
                }
                out
            }
        }
    }

    /// Runs the checks of a single (non-`all`) suite that apply to `sc`.
    pub fn run_scenario(self, sc: &Scenario, s: &Settings) -> Result<Vec<CheckResult>> {
        let n = sc.dim();
        let embedded = sc.is_embedded();
        let closed = sc.is_closed();
        let mut out = Vec::new();
        match self {
            Suite::Jets => {}
            Suite::Structural => {
                out.extend(structural(sc, s)?);
                if embedded {
                    out.extend(tensor_weights(sc, s)?);
                    if n == 4 {
                        out.extend(quartic_weights(sc, s)?);
                    }
                }
            }
            Suite::Intrinsic if !embedded => {
                out.extend(covariance(sc, s, Op::P2, &s.params)?);
                if n >= 3 {
                    out.extend(covariance(sc, s, Op::P4, &s.params)?);
                }
                if n == 2 {
                    out.extend(q_law(sc, s, &QSpec::Q2, &s.params)?);
                }
                if n == 4 {
                    out.extend(q_law(sc, s, &QSpec::Q4, &s.params)?);
                    out.push(p_of_one(sc, s, Op::P4)?);
                    if closed {
                        out.push(self_adjoint(sc, s, Op::P4)?);
                        out.push(gauss_bonnet(sc, s, s.params.rho_coefficient)?);
                    }
                }
            }
            Suite::Audit => {
                if !embedded && n >= 3 {
                    out.extend(q4_audit(sc, s)?);
                }
                if embedded && n == 4 {
                    out.extend(c_audit(sc, s)?);
                }
            }
            Suite::Extrinsic if embedded => {
                out.extend(covariance(sc, s, Op::ExtP2, &s.params)?);
                if n == 2 {
                    out.extend(q_law(sc, s, &QSpec::EXT_Q2, &s.params)?);
                }
                if n >= 3 {
                    out.extend(covariance(sc, s, Op::ExtP3, &s.params)?);
                }
                if n == 3 {
                    out.extend(q_law(sc, s, &QSpec::EXT_Q3, &s.params)?);
                    out.push(p_of_one(sc, s, Op::ExtP3)?);
                }
            }
            Suite::Umbilic if embedded && sc.umbilic => {
                out.extend(umbilic_reductions(sc, s)?);
                if n >= 3 {
                    out.push(lemma_simple(sc, s)?);
                }
                if n >= 4 {
                    out.extend(covariance(sc, s, Op::ExtP4Umbilic, &s.params)?);
                }
                if n == 4 {
                    out.extend(q_law(sc, s, &QSpec::EXT_Q4_UMBILIC, &s.params)?);
                    out.push(p_of_one(sc, s, Op::ExtP4Umbilic)?);
                }
            }
            Suite::Critical if embedded && n == 4 => {
                out.extend(covariance(sc, s, Op::ExtP4Critical, &s.params)?);
                out.push(p_of_one(sc, s, Op::ExtP4Critical)?);
                out.push(c_orientation_flip(sc, s)?);
                if closed {
                    out.push(self_adjoint(sc, s, Op::ExtP4Critical)?);
                    if sc.umbilic {
                        out.push(self_adjoint(sc, s, Op::ExtP4Umbilic)?);
                    }
                }
            }
            Suite::Invariants if embedded && n == 4 && closed => {
                out.extend(global_invariant(sc, s)?);
                if sc.umbilic {
                    out.push(i1_normalization(sc, s)?);
                }
            }
            Suite::All => {
                for part in Suite::All.parts() {
                    out.extend(part.run_scenario(sc, s)?);
                }
            }
            _ => {}
        }
        Ok(out)
    }

    /// The jet-engine checks.
    pub fn run_jets(s: &Settings) -> Result<Vec<CheckResult>> {
        Ok(vec![polynomial_partials(s)?, fd_order(s)?, product_rule(s)?])
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Suite> {
        Suite::ALL
            .iter()
            .copied()
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|x| x.name()).collect();
                Error::Other(format!("unknown suite `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// Results for one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub checks: Vec<CheckResult>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    /// Records that document rejected alternatives.
    pub evidence: usize,
}

impl Summary {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a CheckResult>) -> Summary {
        let mut s = Summary::default();
        for r in records {
            s.checks += 1;
            if r.evidence {
                s.evidence += 1;
            } else if r.pass {
                s.passed += 1;
            } else {
                s.failed += 1;
            }
        }
        s
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Groups records by scenario, keeping first-appearance order.
pub fn group(records: Vec<CheckResult>) -> Vec<ScenarioReport> {
    let mut out: Vec<ScenarioReport> = Vec::new();
    for r in records {
        match out.iter_mut().find(|g| g.name == r.scenario) {
            Some(g) => g.checks.push(r),
            None => out.push(ScenarioReport {
                name: r.scenario.clone(),
                checks: vec![r],
            }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            assert_eq!(serde_json::to_value(s).unwrap(), s.name());
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn all_covers_every_default() {
        let all = Suite::All.default_scenarios();
        for s in Suite::All.parts() {
            for name in s.default_scenarios() {
                assert!(all.contains(&name));
            }
        }
    }

    #[test]
    fn p4_suites_need_degree_five() {
        assert_eq!(Suite::Intrinsic.min_degree(), 5);
        assert_eq!(Suite::All.min_degree(), 5);
        assert!(Suite::Extrinsic.min_degree() < 5);
    }

    #[test]
    fn summary_counts() {
        let ok = CheckResult::upper("a", "s", 0, 1, 0.0, 1.0, 1.0);
        let bad = CheckResult::upper("b", "s", 0, 1, 2.0, 1.0, 1.0);
        let ev = bad.clone().as_evidence();
        let s = Summary::of([&ok, &bad, &ev]);
        assert_eq!((s.checks, s.passed, s.failed, s.evidence), (3, 1, 1, 1));
        assert!(!s.all_passed());
        let groups = group(vec![ok.clone(), CheckResult { scenario: "t".into(), ..ok }, bad]);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].checks.len(), 2);
    }
}
