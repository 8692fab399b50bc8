//! Checks of the jet engine against independent derivative oracles.

use rand::Rng;

use crate::error::Result;
use crate::expr::{Env, Expr};
use crate::jet::{Jet, MAX_DEGREE};

use super::{CheckResult, ErrorStats, Settings};

use super::suite::JETS_SCENARIO as SCENARIO;

/// Random integer polynomials in up to three variables: every partial of
/// order ≤ degree against the exact derivatives of the monomials.
pub fn polynomial_partials(settings: &Settings) -> Result<CheckResult> {
    let check = "polynomial_partials";
    let (seed, mut rng) = settings.rng(SCENARIO, check);
    let degree = settings.degree.min(MAX_DEGREE);
    let mut stats = ErrorStats::default();
    for _ in 0..20 {
        let nvars = rng.gen_range(1..=3);
        let vars: Vec<String> = (1..=nvars).map(|i| format!("x{i}")).collect();
        let terms: Vec<(i64, Vec<u32>)> = (0..rng.gen_range(1..=6))
            .map(|_| {
                let mut exps = vec![0u32; nvars];
                let mut room = rng.gen_range(0..=degree) as u32;
                for e in exps.iter_mut() {
                    let k = rng.gen_range(0..=room);
                    *e = k;
                    room -= k;
                }
                (rng.gen_range(-5..=5), exps)
            })
            .collect();
        let text = terms
            .iter()
            .map(|(c, exps)| {
                let mut s = format!("({c})");
                for (v, e) in vars.iter().zip(exps) {
                    s.push_str(&format!("*{v}^{e}"));
                }
                s
            })
            .collect::<Vec<_>>()
            .join(" + ");
        let expr = Expr::parse(&text)?;
        let point: Vec<i64> = (0..nvars).map(|_| rng.gen_range(-2..=2)).collect();
        let pf: Vec<f64> = point.iter().map(|&p| p as f64).collect();
        let seeds = Jet::seed_point(&pf, degree)?;
        let jet = expr.eval_jet(&Env {
            names: &vars,
            values: &seeds,
        })?;
        for alpha in jet.multi_indices() {
            let exact = exact_partial(&terms, &point, &alpha);
            let got = jet.extract(&alpha)?;
            let scale = exact.abs().max(1.0);
            stats.push(got / scale, exact / scale);
        }
    }
    Ok(CheckResult::upper(
        check,
        SCENARIO,
        seed,
        stats.samples,
        stats.max_abs,
        1.0,
        settings.tol.control,
    )
    .with_note("relative to max(1, |exact partial|) per multi-index"))
}

fn exact_partial(terms: &[(i64, Vec<u32>)], point: &[i64], alpha: &[usize]) -> f64 {
    let mut total: i128 = 0;
    for (c, exps) in terms {
        let mut t = *c as i128;
        for ((&e, &a), &p) in exps.iter().zip(alpha).zip(point) {
            let (e, a) = (e as i128, a as i128);
            if a > e {
                t = 0;
                break;
            }
            for k in 0..a {
                t *= e - k;
            }
            t *= (p as i128).pow((e - a) as u32);
        }
        total += t;
    }
    total as f64
}

/// Fields whose derivatives of every order are bounded away from zero on
/// the sampling box, so the leading truncation term never vanishes.
const FD_FIELDS: &[&str] = &[
    "exp(0.7*x1 - 0.4*x2)",
    "1/(2 + x1 + 0.5*x2)",
    "log(3 + x1 - 0.5*x2)",
    "x1^0.5*exp(0.3*x2)",
];

/// Central differences at steps 3e-2 and 3e-3 against first and second jet
/// derivatives; the observed convergence order must be 2 within tolerance.
pub fn fd_order(settings: &Settings) -> Result<CheckResult> {
    let check = "fd_order";
    let (seed, mut rng) = settings.rng(SCENARIO, check);
    let vars = vec!["x1".to_string(), "x2".to_string()];
    let steps = [3e-2, 3e-3];
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for text in FD_FIELDS {
        let expr = Expr::parse(text)?;
        let x = [rng.gen_range(0.3..1.2), rng.gen_range(-0.8..0.8)];
        let seeds = Jet::seed_point(&x, 2)?;
        let jet = expr.eval_jet(&Env {
            names: &vars,
            values: &seeds,
        })?;
        let f = |p: [f64; 2]| expr.eval_f64(&|v| match v {
            "x1" => Some(p[0]),
            "x2" => Some(p[1]),
            _ => None,
        });
        for i in 0..2 {
            let mut e1 = [0usize; 2];
            e1[i] = 1;
            let mut e2 = [0usize; 2];
            e2[i] = 2;
            let d1 = jet.extract(&e1)?;
            let d2 = jet.extract(&e2)?;
            let mut err1 = [0.0; 2];
            let mut err2 = [0.0; 2];
            for (k, &h) in steps.iter().enumerate() {
                let mut xp = x;
                xp[i] += h;
                let mut xm = x;
                xm[i] -= h;
                let (fp, fm, f0) = (f(xp)?, f(xm)?, f(x)?);
                err1[k] = ((fp - fm) / (2.0 * h) - d1).abs();
                err2[k] = ((fp - 2.0 * f0 + fm) / (h * h) - d2).abs();
            }
            for err in [err1, err2] {
                let order = (err[0] / err[1]).log10();
                lo = lo.min(order);
                hi = hi.max(order);
                worst = worst.max((order - 2.0).abs());
                samples += 1;
            }
        }
    }
    Ok(CheckResult::upper(check, SCENARIO, seed, samples, worst, 1.0, settings.tol.fd_order)
        .with_detail("min_order", lo)
        .with_detail("max_order", hi)
        .with_note("max |observed order − 2| over first and second derivatives"))
}

/// `∂_i(ab) = ∂_i a · b + a · ∂_i b` at the base point for random jets.
pub fn product_rule(settings: &Settings) -> Result<CheckResult> {
    let check = "product_rule";
    let (seed, mut rng) = settings.rng(SCENARIO, check);
    let mut stats = ErrorStats::default();
    for _ in 0..50 {
        let nvars = rng.gen_range(1..=6);
        let degree = rng.gen_range(1..=4);
        let mut random = || {
            let n = crate::jet::coefficient_count(nvars, degree);
            Jet::from_coeffs(nvars, degree, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        };
        let (a, b) = (random()?, random()?);
        let ab = &a * &b;
        for i in 0..nvars {
            let mut e = vec![0; nvars];
            e[i] = 1;
            let lhs = ab.extract(&e)?;
            let rhs = a.extract(&e)? * b.value() + a.value() * b.extract(&e)?;
            stats.push(lhs, rhs);
        }
    }
    Ok(stats.result(check, SCENARIO, seed, settings.tol.control))
}
