//! Second fundamental form, normal slices and normal derivatives against
//! ambient-chart computations.

use extrinsic_q::expr::Env;
use extrinsic_q::hypersurface::{Embedding, ExtrinsicGeometry};
use extrinsic_q::operators::{self, GeometrySource, OpParams};
use extrinsic_q::scenario::{self, Scenario};
use extrinsic_q::{Jet, Metric, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn embedding(sc: &Scenario) -> Arc<Embedding> {
    match &sc.source {
        GeometrySource::Embedded(e) => e.clone(),
        GeometrySource::Intrinsic(_) => panic!("{} is not embedded", sc.name),
    }
}

fn points(sc: &Scenario, count: usize, seed: u64) -> Vec<Vec<f64>> {
    sc.random_points(&mut ChaCha8Rng::seed_from_u64(seed), count)
}

/// `∂_i ι^a` and `∂_i∂_j ι^a` from jets of the embedding components.
fn embedding_derivatives(emb: &Embedding, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
    let n = x.len();
    let seeds = Jet::seed_point(x, 2).unwrap();
    let env = Env {
        names: &emb.surface().vars,
        values: &seeds,
    };
    let comps: Vec<Jet> = emb.components().iter().map(|c| c.eval_jet(&env).unwrap()).collect();
    let unit = |i: usize, j: Option<usize>| {
        let mut a = vec![0; n];
        a[i] += 1;
        if let Some(j) = j {
            a[j] += 1;
        }
        a
    };
    let d1 = (0..n)
        .map(|i| comps.iter().map(|c| c.extract(&unit(i, None)).unwrap()).collect())
        .collect();
    let d2 = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| comps.iter().map(|c| c.extract(&unit(i, Some(j))).unwrap()).collect())
                .collect()
        })
        .collect();
    (d1, d2)
}

/// `L_ij = −ḡ(ν, ∂_i∂_jι + Γ̄(∂_iι, ∂_jι))` in the ambient chart.
fn sff_oracle(emb: &Embedding, xg: &ExtrinsicGeometry, x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let y = emb.point(x).unwrap();
    let amb = emb.ambient().at(&y, 1).unwrap();
    let gamma = amb.christoffel().unwrap();
    let nu = xg.normal_in_ambient_chart();
    let (d1, d2) = embedding_derivatives(emb, x);
    let m = n + 1;
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for a in 0..m {
                let mut accel = d2[i][j][a];
                for b in 0..m {
                    for c in 0..m {
                        accel += gamma.get(&[a, b, c]).value() * d1[i][b] * d1[j][c];
                    }
                }
                for b in 0..m {
                    acc += amb.metric().at2(a, b).value() * nu[b] * accel;
                }
            }
            out[i][j] = -acc;
        }
    }
    out
}

fn assert_close(got: &Tensor, want: &[f64], tol: f64, what: &str) {
    let vals = got.values();
    assert_eq!(vals.len(), want.len(), "{what}");
    let scale = want.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for (k, (g, w)) in vals.iter().zip(want).enumerate() {
        assert!((g - w).abs() <= tol * scale, "{what}[{k}]: {g} vs {w}");
    }
}

#[test]
fn second_fundamental_form_matches_ambient_formula() {
    for name in ["GRAPH(3)", "GRAPH(4)", "SLICE(S2xS2)", "SPHERE_IN_FLAT(3,1)"] {
        let sc = scenario::build(name).unwrap();
        let emb = embedding(&sc);
        for x in points(&sc, 3, 7) {
            let xg = emb.geometry(&x, 2).unwrap();
            let want: Vec<f64> = sff_oracle(&emb, &xg, &x).concat();
            assert_close(xg.second_fundamental_form().unwrap(), &want, 1e-10, name);
        }
    }
}

#[test]
fn sphere_of_radius_two_has_mean_curvature_one_half() {
    let sc = scenario::build("SPHERE_IN_FLAT(4,2)").unwrap();
    let emb = embedding(&sc);
    for x in points(&sc, 5, 3) {
        let xg = emb.geometry(&x, 2).unwrap();
        assert!((xg.mean_curvature().unwrap().value() - 0.5).abs() < 1e-12);
        assert!(xg.trace_free_sff().unwrap().max_abs_value() < 1e-12);
        let y = emb.point(&x).unwrap();
        let nu = xg.normal_in_ambient_chart();
        for (n, p) in nu.iter().zip(&y) {
            assert!((n - p / 2.0).abs() < 1e-12);
        }
    }
}

#[test]
fn three_sphere_fialkow_tensor_vanishes() {
    let sc = scenario::build("SPHERE_IN_FLAT(3,1)").unwrap();
    let emb = embedding(&sc);
    for x in points(&sc, 5, 4) {
        let xg = emb.geometry(&x, 3).unwrap();
        assert!(xg.fialkow().unwrap().max_abs_value() < 1e-10);
    }
}

#[test]
fn slice_weyl_slice_is_nonzero_and_trace_free() {
    let sc = scenario::build("SLICE(S2xS2)").unwrap();
    let emb = embedding(&sc);
    for x in points(&sc, 4, 5) {
        let xg = emb.geometry(&x, 2).unwrap();
        let w = xg.weyl_slice().unwrap();
        assert!(xg.surface().norm2(w).unwrap().value() > 1e-3);
        assert!(xg.surface().trace(w).unwrap().value().abs() < 1e-12);
    }
}

#[test]
fn graph_over_flat_torus_has_flat_ambient() {
    let sc = scenario::build("GRAPH(3,flat)").unwrap();
    let emb = embedding(&sc);
    let xg = emb.geometry(&[0.2, 1.3, 4.4], 2).unwrap();
    assert!(xg.ambient_schouten().unwrap().max_abs_value() < 1e-12);
    assert!(xg.curvature_slice().unwrap().max_abs_value() < 1e-12);
    assert!(xg.trace_free_sff().unwrap().max_abs_value() > 1e-3);
}

/// `(∇̄_ν T)` contracted with chart vectors, for a covariant ambient tensor
/// field sampled by `sample`, using central differences along the straight
/// chart line through `y` in direction `ν`.
fn normal_derivative_oracle(
    ambient: &Metric,
    y: &[f64],
    nu: &[f64],
    rank: usize,
    sample: &dyn Fn(&Metric, &[f64]) -> Tensor,
    slots: &[Vec<f64>],
) -> f64 {
    let m = y.len();
    let h = 1e-4;
    let shifted = |s: f64| -> Vec<f64> { y.iter().zip(nu).map(|(p, v)| p + s * v).collect() };
    let tp = sample(ambient, &shifted(h)).values();
    let tm = sample(ambient, &shifted(-h)).values();
    let t0 = sample(ambient, y).values();
    let gamma = ambient.at(y, 1).unwrap();
    let gamma = gamma.christoffel().unwrap();
    // Γ(ν, v) for each slot vector
    let turned: Vec<Vec<f64>> = slots
        .iter()
        .map(|v| {
            (0..m)
                .map(|d| {
                    let mut acc = 0.0;
                    for c in 0..m {
                        for a in 0..m {
                            acc += gamma.get(&[d, c, a]).value() * nu[c] * v[a];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let contract = |vals: &[f64], vecs: &[&Vec<f64>]| {
        let mut total = 0.0;
        let count = m.pow(rank as u32);
        for flat in 0..count {
            let mut rest = flat;
            let mut w = 1.0;
            for k in (0..rank).rev() {
                w *= vecs[k][rest % m];
                rest /= m;
            }
            total += vals[flat] * w;
        }
        total
    };
    let all: Vec<&Vec<f64>> = slots.iter().collect();
    let derivative = (contract(&tp, &all) - contract(&tm, &all)) / (2.0 * h);
    let mut correction = 0.0;
    for k in 0..rank {
        let mut vecs = all.clone();
        vecs[k] = &turned[k];
        correction += contract(&t0, &vecs);
    }
    derivative - correction
}

fn schouten_at(g: &Metric, y: &[f64]) -> Tensor {
    g.at(y, 2).unwrap().schouten().unwrap().clone()
}

fn weyl_at(g: &Metric, y: &[f64]) -> Tensor {
    g.at(y, 2).unwrap().weyl().unwrap().clone()
}

#[test]
fn normal_derivatives_match_finite_differences() {
    for name in ["GRAPH(3)", "SLICE(S2xS2)", "SLICE(PS3)"] {
        let sc = scenario::build(name).unwrap();
        let emb = embedding(&sc);
        let n = emb.n();
        for x in points(&sc, 2, 11) {
            let xg = emb.geometry(&x, 3).unwrap();
            let y = emb.point(&x).unwrap();
            let nu = xg.normal_in_ambient_chart();
            let (d1, _) = embedding_derivatives(&emb, &x);
            let rho = xg.normal_derivative_schouten().unwrap();
            let weyl = xg.normal_derivative_weyl_slice().unwrap();
            let scale = 1.0f64.max(rho.max_abs_value()).max(weyl.max_abs_value());
            for i in 0..n {
                for j in 0..n {
                    let slots = [d1[i].clone(), d1[j].clone()];
                    let want = normal_derivative_oracle(emb.ambient(), &y, &nu, 2, &schouten_at, &slots);
                    let got = rho.at2(i, j).value();
                    assert!((got - want).abs() < 1e-6 * scale, "{name} ∇ρ̄[{i}{j}]: {got} vs {want}");
                    let slots = [nu.clone(), d1[i].clone(), nu.clone(), d1[j].clone()];
                    let want = normal_derivative_oracle(emb.ambient(), &y, &nu, 4, &weyl_at, &slots);
                    let got = weyl.at2(i, j).value();
                    assert!((got - want).abs() < 1e-6 * scale, "{name} ∇W̄[{i}{j}]: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn umbilic_invariants_vanish() {
    let params = OpParams::default();
    for name in ["SPHERE_IN_FLAT(4,2)", "SLICE(S2xS2)"] {
        let sc = scenario::build(name).unwrap();
        let emb = embedding(&sc);
        for x in points(&sc, 3, 13) {
            let xg = emb.geometry(&x, 5).unwrap();
            let c = operators::c_invariant(&xg, &params).unwrap().value();
            let i2 = operators::integrand_i2(&xg).unwrap().value();
            let i3 = operators::integrand_i3(&xg).unwrap().value();
            for (what, v) in [("𝒞", c), ("I₂", i2), ("I₃", i3)] {
                assert!(v.abs() < 1e-9, "{name} {what} = {v}");
            }
        }
    }
}
