//! Embedded hypersurfaces and their extrinsic geometry.
//!
//! An [`Embedding`] maps a surface chart into an ambient chart carrying a
//! metric `ḡ`. Normal data come from adapted coordinates
//! `y(x, s) = ι(x) + s·N(x)`, where `N` is the Euclidean cofactor normal of
//! `dι`. In these coordinates the surface is `s = 0`, tangential jets are
//! obtained by restricting `s`, and normal derivatives are ordinary covariant
//! derivatives of the ambient jets.
//!
//! The unit normal `ν` is chosen with `ḡ(ν, N) > 0` and then multiplied by
//! the embedding orientation. `L_ij = ḡ(∇̄_i ν, ∂_j)`, so an outward normal
//! on a round sphere of radius `r` gives `H = 1/r`.
//!
//! Normal slices use `𝒲_ij = W̄(ν,∂_i,ν,∂_j)` and `Ḡ_ij = R̄(ν,∂_i,ν,∂_j)`
//! in the curvature index convention of [`crate::curvature`].

use std::collections::HashMap;
use std::sync::Arc;

use once_cell::unsync::OnceCell;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Env, Expr};
use crate::geometry::{Chart, Metric, PointGeometry, Tensor};
use crate::jet::{Jet, MAX_DEGREE};

#[derive(Clone)]
pub struct Embedding {
    surface: Arc<Chart>,
    ambient: Metric,
    components: Vec<Expr>,
    orientation: f64,
}

impl std::fmt::Debug for Embedding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Embedding")
            .field("surface", &self.surface.vars)
            .field("ambient", &self.ambient.chart().vars)
            .field("components", &self.components.iter().map(|e| e.to_string()).collect::<Vec<_>>())
            .field("orientation", &self.orientation)
            .finish()
    }
}

impl Embedding {
    pub fn new(
        surface: Arc<Chart>,
        ambient: Metric,
        components: Vec<Expr>,
        orientation: f64,
    ) -> Result<Embedding> {
        let n = surface.dim();
        if ambient.dim() != n + 1 {
            return Err(Error::Dimension(format!(
                "a {n}-dimensional hypersurface needs a {}-dimensional ambient chart, got {}",
                n + 1,
                ambient.dim()
            )));
        }
        if components.len() != n + 1 {
            return Err(Error::Dimension(format!(
                "embedding has {} components, expected {}",
                components.len(),
                n + 1
            )));
        }
        if !ambient.is_composable() {
            return Err(Error::Other(
                "ambient metric must be given by closed-form components".into(),
            ));
        }
        if orientation != 1.0 && orientation != -1.0 {
            return Err(Error::Other("orientation must be +1 or -1".into()));
        }
        for c in &components {
            c.validate(&surface.vars)?;
        }
        Ok(Embedding {
            surface,
            ambient,
            components,
            orientation,
        })
    }

    pub fn n(&self) -> usize {
        self.surface.dim()
    }

    pub fn surface(&self) -> &Arc<Chart> {
        &self.surface
    }

    pub fn ambient(&self) -> &Metric {
        &self.ambient
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn with_orientation(&self, orientation: f64) -> Result<Embedding> {
        Embedding::new(
            self.surface.clone(),
            self.ambient.clone(),
            self.components.clone(),
            orientation,
        )
    }

    /// The same map into `(ambient chart, e^{2φ} ḡ)`.
    pub fn rescaled(&self, phi: &Expr) -> Result<Embedding> {
        Ok(Embedding {
            surface: self.surface.clone(),
            ambient: self.ambient.conformal(phi.clone())?,
            components: self.components.clone(),
            orientation: self.orientation,
        })
    }

    /// `ι*φ` as an expression in the surface variables.
    pub fn pullback(&self, phi: &Expr) -> Expr {
        let map: HashMap<String, Expr> = self
            .ambient
            .chart()
            .vars
            .iter()
            .cloned()
            .zip(self.components.iter().cloned())
            .collect();
        phi.substitute(&map)
    }

    pub fn induced_metric(self: &Arc<Self>) -> Metric {
        Metric::induced(self.clone())
    }

    /// `ι(x)` in ambient coordinates.
    pub fn point(&self, x: &[f64]) -> Result<Vec<f64>> {
        let seeds = Jet::seed_point(x, 0)?;
        let env = Env {
            names: &self.surface.vars,
            values: &seeds,
        };
        self.components
            .iter()
            .map(|c| Ok(c.eval_jet(&env)?.value()))
            .collect()
    }

    fn iota(&self, x: &[f64], degree: usize) -> Result<Vec<Jet>> {
        if x.len() != self.n() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, surface chart has {}",
                x.len(),
                self.n()
            )));
        }
        let seeds = Jet::seed_point(x, degree)?;
        let env = Env {
            names: &self.surface.vars,
            values: &seeds,
        };
        self.components.iter().map(|c| c.eval_jet(&env)).collect()
    }

    /// Induced metric `h_ij = ḡ_ab ∂_iι^a ∂_jι^b` at `x`.
    pub(crate) fn induced_components(&self, x: &[f64], degree: usize) -> Result<Tensor> {
        let n = self.n();
        let iota = self.iota(x, degree + 1)?;
        let dio: Vec<Vec<Jet>> = (0..n)
            .map(|i| iota.iter().map(|c| c.partial(i)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let at: Vec<Jet> = iota.iter().map(|c| c.truncate(degree)).collect();
        let gbar = self.ambient.eval_on(&at)?;
        Ok(pull_metric(&gbar, &dio, n))
    }

    /// Adapted-coordinate geometry at `x` with ambient metric jets of the
    /// given degree.
    pub fn geometry(&self, x: &[f64], degree: usize) -> Result<ExtrinsicGeometry> {
        let n = self.n();
        if degree == 0 {
            return Err(Error::degree("extrinsic geometry", 1, 0));
        }
        if degree + 2 > MAX_DEGREE {
            return Err(Error::degree("adapted coordinates", degree + 2, MAX_DEGREE));
        }
        let iota = self.iota(x, degree + 2)?;
        // dio_rows[b][i] = ∂_i ι^b
        let dio_rows: Vec<Vec<Jet>> = iota
            .iter()
            .map(|c| (0..n).map(|i| c.partial(i)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let normal = cofactor_normal(&dio_rows, n);

        let s = Jet::seed_variable(n, 0.0, n + 1, degree + 1)?;
        let y: Vec<Jet> = (0..=n)
            .map(|a| iota[a].truncate(degree + 1).extend_var() + &s * &normal[a].extend_var())
            .collect();
        // jac[A][a] = ∂_A y^a
        let jac: Vec<Vec<Jet>> = (0..=n)
            .map(|big_a| y.iter().map(|c| c.partial(big_a)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let y_d: Vec<Jet> = y.iter().map(|c| c.truncate(degree)).collect();
        let gbar = self.ambient.eval_on(&y_d)?;
        let big_g = pull_metric(&gbar, &jac, n + 1);

        let mut point = x.to_vec();
        point.push(0.0);
        let ambient = PointGeometry::new(point, big_g)?;
        let surface = PointGeometry::new(x.to_vec(), ambient.metric().pullback_restrict(n))?;

        let ginv = ambient.inverse();
        let inv_norm = ginv.at2(n, n).sqrt()?.recip()?;
        let nu: Vec<Jet> = (0..=n)
            .map(|a| (ginv.at2(a, n) * &inv_norm).scale(self.orientation))
            .collect();

        Ok(ExtrinsicGeometry {
            n,
            sigma: self.orientation,
            ambient_point: self.point(x)?,
            ambient,
            surface,
            jac,
            nu,
            inv_norm,
            sff: OnceCell::new(),
            mean: OnceCell::new(),
            trace_free: OnceCell::new(),
            rho_bar: OnceCell::new(),
            weyl_slice: OnceCell::new(),
            curv_slice: OnceCell::new(),
            nabla_rho: OnceCell::new(),
            nabla_weyl_slice: OnceCell::new(),
        })
    }
}

/// `Σ_ab ḡ_ab J[A][a] J[B][b]` for the rows `J[A]`.
fn pull_metric(gbar: &Tensor, rows: &[Vec<Jet>], dim: usize) -> Tensor {
    let amb = gbar.dim();
    let nv = rows[0][0].nvars();
    let d = gbar.degree().min(rows[0][0].degree());
    // m[A][b] = Σ_a J[A][a] ḡ_ab
    let m: Vec<Vec<Jet>> = (0..dim)
        .map(|big_a| {
            (0..amb)
                .map(|b| {
                    let mut acc = Jet::zero(nv, d);
                    for a in 0..amb {
                        acc.fma(&rows[big_a][a], gbar.at2(a, b));
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let upper: Vec<Vec<Jet>> = (0..dim)
        .map(|big_a| {
            (big_a..dim)
                .map(|big_b| {
                    let mut acc = Jet::zero(nv, d);
                    for b in 0..amb {
                        acc.fma(&m[big_a][b], &rows[big_b][b]);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Tensor::from_fn(dim, 2, |idx| {
        let (a, b) = if idx[0] <= idx[1] {
            (idx[0], idx[1])
        } else {
            (idx[1], idx[0])
        };
        upper[a][b - a].clone()
    })
}

/// `N_a = det[∂_1ι, …, ∂_nι, e_a]` from the `(n+1)×n` matrix `rows[b][i]`.
fn cofactor_normal(rows: &[Vec<Jet>], n: usize) -> Vec<Jet> {
    let total = n + 1;
    let nv = rows[0][0].nvars();
    let d = rows[0][0].degree();
    // minors[S] = det of rows S (sorted), columns 0..|S|
    let mut minors: Vec<Option<Jet>> = vec![None; 1 << total];
    minors[0] = Some(Jet::constant(1.0, nv, d));
    let mut sets: Vec<usize> = (1..(1usize << total)).collect();
    sets.sort_by_key(|s| s.count_ones());
    for set in sets {
        let k = set.count_ones() as usize;
        if k > n {
            continue;
        }
        let col = k - 1;
        let mut acc = Jet::zero(nv, d);
        let mut rank = 0;
        for b in 0..total {
            if set & (1 << b) == 0 {
                continue;
            }
            let sub = minors[set & !(1 << b)].as_ref().expect("smaller minor");
            let term = &rows[b][col] * sub;
            if (rank + col).is_multiple_of(2) {
                acc = acc + term;
            } else {
                acc = acc - term;
            }
            rank += 1;
        }
        minors[set] = Some(acc);
    }
    let full = (1usize << total) - 1;
    (0..total)
        .map(|a| {
            let minor = minors[full & !(1 << a)].as_ref().expect("computed");
            if (a + n).is_multiple_of(2) {
                minor.clone()
            } else {
                -minor
            }
        })
        .collect()
}

/// Extrinsic quantities of an embedding at one point.
pub struct ExtrinsicGeometry {
    n: usize,
    sigma: f64,
    ambient_point: Vec<f64>,
    ambient: PointGeometry,
    surface: PointGeometry,
    jac: Vec<Vec<Jet>>,
    nu: Vec<Jet>,
    inv_norm: Jet,
    sff: OnceCell<Tensor>,
    mean: OnceCell<Jet>,
    trace_free: OnceCell<Tensor>,
    rho_bar: OnceCell<Tensor>,
    weyl_slice: OnceCell<Tensor>,
    curv_slice: OnceCell<Tensor>,
    nabla_rho: OnceCell<Tensor>,
    nabla_weyl_slice: OnceCell<Tensor>,
}

impl ExtrinsicGeometry {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn orientation(&self) -> f64 {
        self.sigma
    }

    pub fn surface(&self) -> &PointGeometry {
        &self.surface
    }

    /// Ambient geometry in adapted coordinates `(x, s)`.
    pub fn ambient(&self) -> &PointGeometry {
        &self.ambient
    }

    /// `ν^A` in adapted coordinates.
    pub fn normal(&self) -> &[Jet] {
        &self.nu
    }

    /// Values of `ν^a` in the ambient chart coordinates.
    pub fn normal_in_ambient_chart(&self) -> Vec<f64> {
        (0..=self.n)
            .map(|a| {
                (0..=self.n)
                    .map(|big_a| self.jac[big_a][a].value() * self.nu[big_a].value())
                    .sum()
            })
            .collect()
    }

    /// Whether the ambient Weyl tensor can be non-zero (ambient dimension ≥ 4).
    pub fn weyl_defined(&self) -> bool {
        self.n >= 3
    }

    /// `L_ij = ḡ(∇̄_i ν, ∂_j)`.
    pub fn second_fundamental_form(&self) -> Result<&Tensor> {
        self.sff.get_or_try_init(|| {
            let n = self.n;
            let gamma = self.ambient.christoffel()?;
            let d = gamma.degree();
            let factor = self.inv_norm.truncate(d).scale(-self.sigma);
            Ok(Tensor::from_fn(n, 2, |idx| {
                (gamma.get(&[n, idx[0], idx[1]]) * &factor).restrict_last()
            }))
        })
    }

    /// `H = tr_h L / n`.
    pub fn mean_curvature(&self) -> Result<&Jet> {
        self.mean.get_or_try_init(|| {
            let l = self.second_fundamental_form()?;
            Ok(self.surface.trace(l)?.scale(1.0 / self.n as f64))
        })
    }

    /// `L̊ = L − H h`.
    pub fn trace_free_sff(&self) -> Result<&Tensor> {
        self.trace_free.get_or_try_init(|| {
            let l = self.second_fundamental_form()?;
            let h = self.mean_curvature()?;
            let hh = self.surface.metric().truncate(h.degree()).mul_jet(h);
            l.try_sub(&hh)
        })
    }

    /// Ambient Schouten tensor in adapted coordinates.
    pub fn ambient_schouten(&self) -> Result<&Tensor> {
        self.rho_bar.get_or_try_init(|| self.ambient.schouten().cloned())
    }

    fn contract_normal_2(&self, t: &Tensor) -> Jet {
        let m = self.n + 1;
        let d = t.degree();
        let mut acc = Jet::zero(m, d);
        for a in 0..m {
            let mut row = Jet::zero(m, d);
            for b in 0..m {
                row.fma(&self.nu[b], t.at2(a, b));
            }
            acc.fma(&self.nu[a], &row);
        }
        acc.restrict_last()
    }

    fn contract_normal_1(&self, t: &Tensor) -> Tensor {
        let m = self.n + 1;
        let d = t.degree();
        Tensor::from_fn(self.n, 1, |idx| {
            let mut acc = Jet::zero(m, d);
            for a in 0..m {
                acc.fma(&self.nu[a], t.at2(a, idx[0]));
            }
            acc.restrict_last()
        })
    }

    /// `T(ν,∂_i,ν,∂_j)` for an ambient 4-tensor.
    fn normal_slice(&self, t: &Tensor) -> Tensor {
        let m = self.n + 1;
        let d = t.degree();
        Tensor::from_fn(self.n, 2, |idx| {
            let (i, j) = (idx[0], idx[1]);
            let mut acc = Jet::zero(m, d);
            for a in 0..m {
                let mut row = Jet::zero(m, d);
                for b in 0..m {
                    row.fma(&self.nu[b], t.get(&[a, i, b, j]));
                }
                acc.fma(&self.nu[a], &row);
            }
            acc.restrict_last()
        })
    }

    /// `ι*ρ̄`.
    pub fn schouten_tangential(&self) -> Result<Tensor> {
        Ok(self.ambient_schouten()?.pullback_restrict(self.n))
    }

    /// `ρ̄(ν, ∂_i)`.
    pub fn schouten_mixed(&self) -> Result<Tensor> {
        Ok(self.contract_normal_1(self.ambient_schouten()?))
    }

    /// `ρ̄(ν, ν)`.
    pub fn schouten_normal(&self) -> Result<Jet> {
        Ok(self.contract_normal_2(self.ambient_schouten()?))
    }

    /// `𝒲_ij = W̄(ν,∂_i,ν,∂_j)`; identically zero for a 3-dimensional ambient.
    pub fn weyl_slice(&self) -> Result<&Tensor> {
        self.weyl_slice.get_or_try_init(|| {
            if !self.weyl_defined() {
                let d = self.ambient.degree().saturating_sub(2);
                return Ok(Tensor::from_fn(self.n, 2, |_| Jet::zero(self.n, d)));
            }
            Ok(self.normal_slice(self.ambient.weyl()?))
        })
    }

    /// `Ḡ_ij = R̄(ν,∂_i,ν,∂_j)`.
    pub fn curvature_slice(&self) -> Result<&Tensor> {
        self.curv_slice
            .get_or_try_init(|| Ok(self.normal_slice(self.ambient.riemann()?)))
    }

    fn nabla_nu_schouten(&self) -> Result<&Tensor> {
        self.nabla_rho.get_or_try_init(|| {
            let rho = self.ambient_schouten()?;
            self.ambient.covariant_derivative_along(&self.nu, rho)
        })
    }

    /// `(∇̄_ν ρ̄)(∂_i, ∂_j)`.
    pub fn normal_derivative_schouten(&self) -> Result<Tensor> {
        Ok(self.nabla_nu_schouten()?.pullback_restrict(self.n))
    }

    /// `(∇̄_ν ρ̄)(ν, ∂_i)`.
    pub fn normal_derivative_schouten_mixed(&self) -> Result<Tensor> {
        Ok(self.contract_normal_1(self.nabla_nu_schouten()?))
    }

    /// `(∇̄_ν W̄)(ν,∂_i,ν,∂_j)`; zero for a 3-dimensional ambient.
    pub fn normal_derivative_weyl_slice(&self) -> Result<&Tensor> {
        self.nabla_weyl_slice.get_or_try_init(|| {
            if !self.weyl_defined() {
                let d = self.ambient.degree().saturating_sub(3);
                return Ok(Tensor::from_fn(self.n, 2, |_| Jet::zero(self.n, d)));
            }
            let w = self.ambient.weyl()?;
            let dw = self.ambient.covariant_derivative_along(&self.nu, w)?;
            Ok(self.normal_slice(&dw))
        })
    }

    /// Fialkow tensor `ι*ρ̄ − ρ + H L̊ + ½H² h`, `n ≥ 3`.
    pub fn fialkow(&self) -> Result<Tensor> {
        let rho = self.surface.schouten()?;
        let d = rho.degree();
        let h = self.mean_curvature()?.truncate(d);
        let l0 = self.trace_free_sff()?.truncate(d);
        let hm = self.surface.metric().truncate(d);
        let rho_bar = self.schouten_tangential()?.truncate(d);
        let half_h2 = (&h * &h).scale(0.5);
        rho_bar
            .try_sub(rho)?
            .try_add(&l0.mul_jet(&h))?
            .try_add(&hm.mul_jet(&half_h2))
    }

    /// Values at the point, for reports. Needs degree ≥ 3.
    pub fn pack(&self) -> Result<ExtrinsicPack> {
        let x = self.surface.point().to_vec();
        Ok(ExtrinsicPack {
            point: x,
            ambient_point: self.ambient_point.clone(),
            normal: self.normal_in_ambient_chart(),
            orientation: self.sigma,
            induced_metric: self.surface.metric().to_json(),
            second_fundamental_form: self.second_fundamental_form()?.to_json(),
            mean_curvature: self.mean_curvature()?.value(),
            trace_free_sff: self.trace_free_sff()?.to_json(),
            fialkow: if self.n >= 3 {
                Some(self.fialkow()?.to_json())
            } else {
                None
            },
            weyl_defined: self.weyl_defined(),
            weyl_slice: self.weyl_slice()?.to_json(),
            curvature_slice: self.curvature_slice()?.to_json(),
            schouten_tangential: self.schouten_tangential()?.to_json(),
            schouten_mixed: self.schouten_mixed()?.to_json(),
            schouten_normal: self.schouten_normal()?.value(),
            normal_derivative_schouten: self.normal_derivative_schouten()?.to_json(),
            normal_derivative_schouten_mixed: self.normal_derivative_schouten_mixed()?.to_json(),
            normal_derivative_weyl_slice: self.normal_derivative_weyl_slice()?.to_json(),
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtrinsicPack {
    pub point: Vec<f64>,
    pub ambient_point: Vec<f64>,
    pub normal: Vec<f64>,
    pub orientation: f64,
    pub induced_metric: serde_json::Value,
    pub second_fundamental_form: serde_json::Value,
    pub mean_curvature: f64,
    pub trace_free_sff: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fialkow: Option<serde_json::Value>,
    pub weyl_defined: bool,
    pub weyl_slice: serde_json::Value,
    pub curvature_slice: serde_json::Value,
    pub schouten_tangential: serde_json::Value,
    pub schouten_mixed: serde_json::Value,
    pub schouten_normal: f64,
    pub normal_derivative_schouten: serde_json::Value,
    pub normal_derivative_schouten_mixed: serde_json::Value,
    pub normal_derivative_weyl_slice: serde_json::Value,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Axis;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn chart(prefix: &str, n: usize) -> Arc<Chart> {
        Arc::new(
            Chart::new(
                (1..=n).map(|i| format!("{prefix}{i}")).collect(),
                vec![Axis::periodic(0.0, 2.0 * PI, 8); n],
            )
            .unwrap(),
        )
    }

    fn unit_s2_in_r3(orientation: f64) -> Embedding {
        let surface = Arc::new(
            Chart::new(
                vec!["x1".into(), "x2".into()],
                vec![Axis::interval(0.0, PI, 8), Axis::periodic(0.0, 2.0 * PI, 8)],
            )
            .unwrap(),
        );
        let ambient = Metric::flat(chart("y", 3));
        Embedding::new(
            surface,
            ambient,
            vec![
                e("sin(x1)*cos(x2)"),
                e("sin(x1)*sin(x2)"),
                e("cos(x1)"),
            ],
            orientation,
        )
        .unwrap()
    }

    #[test]
    fn cofactor_normal_of_graph() {
        let s = chart("x", 2);
        let amb = Metric::flat(chart("y", 3));
        let emb = Embedding::new(s, amb, vec![e("x1"), e("x2"), e("0.3*sin(x1)")], 1.0).unwrap();
        let g = emb.geometry(&[0.4, 0.1], 2).unwrap();
        let nu = g.normal_in_ambient_chart();
        let slope = 0.3 * 0.4f64.cos();
        let norm = (1.0 + slope * slope).sqrt();
        assert_relative_eq!(nu[0], -slope / norm, epsilon = 1e-14);
        assert_relative_eq!(nu[1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(nu[2], 1.0 / norm, epsilon = 1e-14);
    }

    #[test]
    fn unit_sphere_is_umbilic_with_outward_normal() {
        // (θ, φ) with ∂θ × ∂φ outward
        let emb = unit_s2_in_r3(1.0);
        let x = [1.1, 0.4];
        let g = emb.geometry(&x, 3).unwrap();
        let nu = g.normal_in_ambient_chart();
        let p = emb.point(&x).unwrap();
        for a in 0..3 {
            assert_relative_eq!(nu[a], p[a], epsilon = 1e-13);
        }
        assert_relative_eq!(g.mean_curvature().unwrap().value(), 1.0, epsilon = 1e-12);
        assert!(g.trace_free_sff().unwrap().max_abs_value() < 1e-12);
        let l = g.second_fundamental_form().unwrap();
        let h = g.surface().metric();
        for (a, b) in l.values().iter().zip(h.values()) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }

        let flipped = emb.with_orientation(-1.0).unwrap().geometry(&x, 3).unwrap();
        assert_relative_eq!(flipped.mean_curvature().unwrap().value(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn induced_metric_matches_adapted() {
        let emb = Arc::new(unit_s2_in_r3(1.0));
        let x = [0.9, 2.0];
        let h1 = emb.induced_metric().component_jets(&x, 2).unwrap();
        let h2 = emb.geometry(&x, 2).unwrap().surface().metric().clone();
        for (a, b) in h1.comps().iter().zip(h2.comps()) {
            assert!((a - b).max_abs() < 1e-13);
        }
        assert_relative_eq!(h1.at2(1, 1).value(), 0.9f64.sin().powi(2), epsilon = 1e-14);
    }

    #[test]
    fn flat_ambient_has_zero_ambient_curvature() {
        let emb = unit_s2_in_r3(1.0);
        let g = emb.geometry(&[0.7, 0.3], 3).unwrap();
        assert!(g.schouten_tangential().unwrap().max_abs_value() < 1e-12);
        assert!(g.schouten_normal().unwrap().value().abs() < 1e-12);
        assert!(g.curvature_slice().unwrap().max_abs_value() < 1e-12);
        assert!(!g.weyl_defined());
        assert_eq!(g.weyl_slice().unwrap().max_abs_value(), 0.0);
    }

    #[test]
    fn pullback_substitutes_components() {
        let emb = unit_s2_in_r3(1.0);
        let phi = e("y3 + y1");
        let pulled = emb.pullback(&phi);
        let v = pulled
            .eval_f64(&|name| match name {
                "x1" => Some(0.5),
                "x2" => Some(0.0),
                _ => None,
            })
            .unwrap();
        assert_relative_eq!(v, 0.5f64.cos() + 0.5f64.sin(), epsilon = 1e-15);
    }

    #[test]
    fn wrong_dimensions_rejected() {
        let s = chart("x", 2);
        let amb = Metric::flat(chart("y", 4));
        assert!(Embedding::new(s.clone(), amb, vec![e("x1"), e("x2"), e("0")], 1.0).is_err());
        let amb = Metric::flat(chart("y", 3));
        assert!(Embedding::new(s.clone(), amb.clone(), vec![e("x1"), e("x2")], 1.0).is_err());
        assert!(Embedding::new(s, amb, vec![e("x1"), e("z"), e("0")], 1.0).is_err());
    }
}
