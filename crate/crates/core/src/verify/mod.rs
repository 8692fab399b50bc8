//! Quadrature, conformal-rescaling plumbing and the identity-check harness.
//!
//! Every check compares two sides of a law at random points (or as
//! integrals) and produces a [`CheckResult`]. Random conformal factors and
//! test functions come from a ChaCha stream seeded by the global seed and
//! the `(scenario, check)` pair, so results are reproducible bit for bit.

mod checks;
mod jets;
pub mod quadrature;
pub mod suite;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::operators::OpParams;

pub use checks::*;
pub use jets::{fd_order, polynomial_partials, product_rule};
pub use quadrature::{integrate, volume, Quadrature, Rule};

/// Tolerance classes, all relative to the check's scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Pointwise covariance and transformation laws.
    pub pointwise: f64,
    /// Integral identities limited by quadrature.
    pub integral: f64,
    /// Gauss–Bonnet and integral consistency on umbilic scenarios.
    pub gauss_bonnet: f64,
    /// Integrals of divergences.
    pub divergence: f64,
    /// `φ = 0` controls.
    pub control: f64,
    /// Algebraic identities (traces, Bianchi).
    pub structural: f64,
    /// Conformal weight checks.
    pub weight: f64,
    /// Exact reductions and `P(1) = 0`.
    pub exact: f64,
    /// The umbilic normal-derivative identity.
    pub lemma: f64,
    /// Minimal relative failure of a rejected audit candidate.
    pub audit_margin: f64,
    /// Minimal size of quantities that must not vanish.
    pub nonzero: f64,
    /// Allowed deviation of the observed finite-difference order from 2.
    pub fd_order: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pointwise: 1e-7,
            integral: 1e-5,
            gauss_bonnet: 1e-6,
            divergence: 1e-7,
            control: 1e-12,
            structural: 1e-9,
            weight: 1e-8,
            exact: 1e-10,
            lemma: 1e-8,
            audit_margin: 1e-2,
            nonzero: 1e-6,
            fd_order: 0.2,
        }
    }
}

/// Numerical settings shared by all checks of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    /// Largest jet degree any evaluation may use.
    pub degree: usize,
    pub seed: u64,
    /// Node count override for every quadrature axis.
    pub nodes: Option<usize>,
    /// Sample points per pointwise check.
    pub points: usize,
    /// Random `(φ, f)` pairs per check.
    pub pairs: usize,
    pub tol: Tolerances,
    pub params: OpParams,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            degree: 6,
            seed: 20240611,
            nodes: None,
            points: 20,
            pairs: 3,
            tol: Tolerances::default(),
            params: OpParams::default(),
        }
    }
}

impl Settings {
    /// Seed of the random stream for one check on one scenario.
    pub fn check_seed(&self, scenario: &str, check: &str) -> u64 {
        self.seed ^ fnv1a(format!("{scenario}/{check}").as_bytes())
    }

    pub fn rng(&self, scenario: &str, check: &str) -> (u64, ChaCha8Rng) {
        let seed = self.check_seed(scenario, check);
        (seed, ChaCha8Rng::seed_from_u64(seed))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Direction of the comparison in a [`CheckResult`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Passes when the relative error is below the tolerance.
    #[default]
    Upper,
    /// Passes when the measured quantity exceeds the tolerance, for
    /// non-vanishing claims and audit margins.
    Lower,
}

/// Outcome of one identity check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub scenario: String,
    pub samples: usize,
    pub max_abs_error: f64,
    pub scale: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "is_upper")]
    pub bound: Bound,
    /// Evidence records document rejected alternatives and never fail a run.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub evidence: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

fn is_upper(b: &Bound) -> bool {
    *b == Bound::Upper
}

impl CheckResult {
    /// Passes iff `max_abs_error / scale < tolerance`.
    pub fn upper(
        check: impl Into<String>,
        scenario: impl Into<String>,
        seed: u64,
        samples: usize,
        max_abs_error: f64,
        scale: f64,
        tolerance: f64,
    ) -> CheckResult {
        let relative_error = max_abs_error / scale;
        CheckResult {
            check: check.into(),
            scenario: scenario.into(),
            samples,
            max_abs_error,
            scale,
            relative_error,
            tolerance,
            pass: relative_error < tolerance,
            seed,
            bound: Bound::Upper,
            evidence: false,
            note: None,
            details: BTreeMap::new(),
        }
    }

    /// Passes iff `measured / scale > tolerance`.
    pub fn lower(
        check: impl Into<String>,
        scenario: impl Into<String>,
        seed: u64,
        samples: usize,
        measured: f64,
        scale: f64,
        tolerance: f64,
    ) -> CheckResult {
        let mut r = CheckResult::upper(check, scenario, seed, samples, measured, scale, tolerance);
        r.bound = Bound::Lower;
        r.pass = r.relative_error > tolerance;
        r
    }

    pub fn with_note(mut self, note: impl Into<String>) -> CheckResult {
        self.note = Some(note.into());
        self
    }

    pub fn with_detail(mut self, key: impl Into<String>, value: f64) -> CheckResult {
        self.details.insert(key.into(), value);
        self
    }

    pub fn as_evidence(mut self) -> CheckResult {
        self.evidence = true;
        self
    }

    pub fn fail(mut self, note: impl Into<String>) -> CheckResult {
        self.pass = false;
        self.note = Some(note.into());
        self
    }

    /// Whether this record makes a run fail.
    pub fn is_failure(&self) -> bool {
        !self.pass && !self.evidence
    }
}

/// Running `max |lhs − rhs|` and `max(|lhs|, |rhs|)` over samples.
#[derive(Clone, Copy, Debug, Default)]
pub struct ErrorStats {
    pub samples: usize,
    pub max_abs: f64,
    pub max_mag: f64,
}

impl ErrorStats {
    pub fn push(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        let err = (lhs - rhs).abs();
        self.max_abs = if err.is_nan() || self.max_abs.is_nan() {
            f64::NAN
        } else {
            self.max_abs.max(err)
        };
        self.max_mag = self.max_mag.max(lhs.abs()).max(rhs.abs());
    }

    pub fn merge(&mut self, other: &ErrorStats) {
        self.samples += other.samples;
        self.max_abs = if other.max_abs.is_nan() || self.max_abs.is_nan() {
            f64::NAN
        } else {
            self.max_abs.max(other.max_abs)
        };
        self.max_mag = self.max_mag.max(other.max_mag);
    }

    /// `max(1, max |lhs|, max |rhs|)`.
    pub fn scale(&self) -> f64 {
        self.max_mag.max(1.0)
    }

    pub fn result(
        &self,
        check: impl Into<String>,
        scenario: impl Into<String>,
        seed: u64,
        tolerance: f64,
    ) -> CheckResult {
        CheckResult::upper(check, scenario, seed, self.samples, self.max_abs, self.scale(), tolerance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_relative_error_below_tolerance() {
        let r = CheckResult::upper("c", "s", 1, 3, 2e-8, 2.0, 1e-8);
        assert_eq!(r.relative_error, 1e-8);
        assert!(!r.pass);
        let r = CheckResult::upper("c", "s", 1, 3, 1e-9, 2.0, 1e-8);
        assert!(r.pass);
        let r = CheckResult::upper("c", "s", 1, 3, f64::NAN, 1.0, 1e-8);
        assert!(!r.pass);
    }

    #[test]
    fn lower_bounds_and_evidence() {
        let r = CheckResult::lower("c", "s", 1, 1, 0.5, 1.0, 1e-2);
        assert!(r.pass);
        let r = CheckResult::lower("c", "s", 1, 1, 1e-3, 1.0, 1e-2).as_evidence();
        assert!(!r.pass && !r.is_failure());
    }

    #[test]
    fn seeds_depend_on_scenario_and_check() {
        let s = Settings::default();
        assert_ne!(s.check_seed("A", "x"), s.check_seed("B", "x"));
        assert_ne!(s.check_seed("A", "x"), s.check_seed("A", "y"));
        assert_eq!(s.check_seed("A", "x"), s.check_seed("A", "x"));
    }

    #[test]
    fn stats_nan_propagates() {
        let mut st = ErrorStats::default();
        st.push(1.0, f64::NAN);
        st.push(1.0, 1.0);
        assert!(st.max_abs.is_nan());
    }

    #[test]
    fn serialization_omits_defaults() {
        let r = CheckResult::upper("c", "s", 1, 3, 0.0, 1.0, 1e-8);
        let v = serde_json::to_value(&r).unwrap();
        assert!(v.get("evidence").is_none());
        assert!(v.get("bound").is_none());
        let back: CheckResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
