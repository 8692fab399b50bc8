//! Metric, curvature and quadrature checks against closed-form values.

use std::f64::consts::PI;

use extrinsic_q::scenario::{self, Scenario};
use extrinsic_q::verify::quadrature::{integrate, volume, Quadrature};
use extrinsic_q::{Expr, ExprField, Jet, Metric, Result, ScalarField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn metric_of(sc: &Scenario) -> Metric {
    sc.surface_metric()
}

fn points(sc: &Scenario, count: usize, seed: u64) -> Vec<Vec<f64>> {
    sc.random_points(&mut ChaCha8Rng::seed_from_u64(seed), count)
}

#[test]
fn conformal_scalar_curvature_on_flat_torus() {
    let sc = scenario::build("FLAT_T4").unwrap();
    let g = metric_of(&sc);
    let gh = g.conformal(Expr::parse("0.1*sin(x1)").unwrap()).unwrap();
    for x in points(&sc, 10, 1) {
        let geo = gh.at(&x, 2).unwrap();
        let scal = geo.scalar_curvature().unwrap().value();
        let phi = 0.1 * x[0].sin();
        let lap = -0.1 * x[0].sin();
        let grad2 = 0.01 * x[0].cos().powi(2);
        let expected = (-2.0 * phi).exp() * (-6.0 * lap - 6.0 * grad2);
        assert!((scal - expected).abs() < 1e-9, "{scal} vs {expected}");
    }
}

#[test]
fn unit_four_sphere_curvature() {
    let sc = scenario::build("ROUND_S(4,1)").unwrap();
    let g = metric_of(&sc);
    for x in points(&sc, 8, 2) {
        let geo = g.at(&x, 2).unwrap();
        assert!((geo.scalar_curvature().unwrap().value() - 12.0).abs() < 1e-10);
        assert!((geo.j().unwrap().value() - 2.0).abs() < 1e-10);
        let rho = geo.schouten().unwrap();
        let h = geo.metric();
        for (r, m) in rho.values().iter().zip(h.values()) {
            assert!((r - 0.5 * m).abs() < 1e-10);
        }
        assert!((geo.norm2(rho).unwrap().value() - 1.0).abs() < 1e-10);
        assert!(geo.weyl().unwrap().max_abs_value() < 1e-10);
    }
}

#[test]
fn twisted_torus_has_weyl_curvature() {
    let sc = scenario::build("TWISTED_T(4)").unwrap();
    let geo = metric_of(&sc).at(&[0.3, 1.1, 2.0, 4.0], 2).unwrap();
    let w = geo.weyl().unwrap();
    assert!(geo.norm2(w).unwrap().value() > 1e-6);
}

#[test]
fn sphere_volume_converges_spectrally() {
    let sc = scenario::build("ROUND_S(4,1)").unwrap();
    let g = metric_of(&sc);
    let exact = 8.0 * PI * PI / 3.0;
    let err = |nodes| {
        let q = Quadrature::for_chart(&sc.chart(), Some(nodes)).unwrap();
        (volume(&g, &q).unwrap() - exact).abs()
    };
    let (coarse, fine) = (err(3), err(6));
    assert!(fine * 10.0 <= coarse, "{coarse} → {fine}");
    assert!(err(12) < 1e-12);
}

#[test]
fn conformal_volume_is_weighted_integral() {
    let sc = scenario::build("ROUND_S(4,1)").unwrap();
    let g = metric_of(&sc);
    let phi = "0.2*cos(x1) + 0.1*sin(x2)*cos(x4)";
    let gh = g.conformal(Expr::parse(phi).unwrap()).unwrap();
    let q = Quadrature::for_chart(&sc.chart(), None).unwrap();
    let weight = ExprField::new(&sc.chart(), Expr::parse(&format!("exp(4*({phi}))")).unwrap()).unwrap();
    let lhs = volume(&gh, &q).unwrap();
    let rhs = integrate(&weight, &g, &q).unwrap();
    assert!((lhs - rhs).abs() < 1e-12 * rhs, "{lhs} vs {rhs}");
}

/// `Δf` for a closed-form `f` as a scalar field.
struct Laplacian {
    g: Metric,
    f: ExprField,
}

impl ScalarField for Laplacian {
    fn dim(&self) -> usize {
        self.g.dim()
    }

    fn eval(&self, point: &[f64], degree: usize) -> Result<Jet> {
        let geo = self.g.at(point, degree + 2)?;
        geo.laplacian(&self.f.eval(point, degree + 2)?)
    }
}

/// `f Δf` and `|df|²` side by side.
struct Energy {
    g: Metric,
    f: ExprField,
    gradient: bool,
}

impl ScalarField for Energy {
    fn dim(&self) -> usize {
        self.g.dim()
    }

    fn eval(&self, point: &[f64], degree: usize) -> Result<Jet> {
        let geo = self.g.at(point, degree + 2)?;
        let f = self.f.eval(point, degree + 2)?;
        if self.gradient {
            let df = geo.gradient(&f)?;
            geo.norm2(&df)
        } else {
            let lap = geo.laplacian(&f)?;
            Ok(&f.truncate(lap.degree()) * &lap)
        }
    }
}

#[test]
fn laplacian_integrates_to_zero_and_is_non_positive() {
    let sc = scenario::build("TWISTED_T(4)").unwrap();
    let g = metric_of(&sc);
    let chart = sc.chart();
    let f = ExprField::new(&chart, Expr::parse("exp(0.5*sin(x1)*cos(x2)) + cos(x3 - x4)").unwrap()).unwrap();
    let q = Quadrature::for_chart(&chart, Some(12)).unwrap();
    let lap = Laplacian { g: g.clone(), f: f.clone() };
    let total = integrate(&lap, &g, &q).unwrap();
    assert!(total.abs() < 1e-9, "∫Δf = {total}");
    let flap = Energy { g: g.clone(), f: f.clone(), gradient: false };
    let grad = Energy { g: g.clone(), f, gradient: true };
    let a = integrate(&flap, &g, &q).unwrap();
    let b = integrate(&grad, &g, &q).unwrap();
    assert!(a < 0.0);
    assert!((a + b).abs() < 1e-9 * b, "∫fΔf = {a}, ∫|df|² = {b}");
}

#[test]
fn christoffel_matches_finite_differences_of_metric() {
    let sc = scenario::build("TWISTED_T(3)").unwrap();
    let g = metric_of(&sc);
    let x = [0.4, 2.2, 5.1];
    let geo = g.at(&x, 1).unwrap();
    let gamma = geo.christoffel().unwrap();
    let ginv = geo.inverse();
    let h = 1e-5;
    let dg = |c: usize, a: usize, b: usize| {
        let mut xp = x;
        xp[c] += h;
        let mut xm = x;
        xm[c] -= h;
        let gp = g.at(&xp, 0).unwrap().metric().at2(a, b).value();
        let gm = g.at(&xm, 0).unwrap().metric().at2(a, b).value();
        (gp - gm) / (2.0 * h)
    };
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut expected = 0.0;
                for l in 0..3 {
                    let first = dg(i, j, l) + dg(j, i, l) - dg(l, i, j);
                    expected += 0.5 * ginv.at2(k, l).value() * first;
                }
                let got = gamma.get(&[k, i, j]).value();
                assert!((got - expected).abs() < 1e-8, "Γ^{k}_{i}{j}: {got} vs {expected}");
            }
        }
    }
}
