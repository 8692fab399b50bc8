//! Charts, metrics and the covariant calculus at a point.
//!
//! Every geometric quantity is evaluated as jets centred at a point of a
//! chart. A [`PointGeometry`] holds the metric jets there and derives the
//! Levi-Civita connection and curvature lazily. Tensors are stored with all
//! indices down; contractions go through the inverse metric.
//!
//! Sign conventions: `δ` is the plain trace of `∇` (no minus sign), so the
//! Laplacian `Δ = δd = g^{ij}∇_i∇_j` is non-positive.

use std::sync::Arc;

use once_cell::unsync::OnceCell;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Env, Expr};
use crate::hypersurface::Embedding;
use crate::jet::Jet;

/// Dense tensor of jets with all indices down.
#[derive(Clone, Debug)]
pub struct Tensor {
    dim: usize,
    rank: usize,
    comps: Vec<Jet>,
}

impl Tensor {
    pub fn from_fn(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> Jet) -> Tensor {
        let len = dim.pow(rank as u32);
        let mut idx = vec![0usize; rank];
        let mut comps = Vec::with_capacity(len);
        for flat in 0..len {
            unflatten(flat, dim, &mut idx);
            comps.push(f(&idx));
        }
        Tensor { dim, rank, comps }
    }

    pub fn try_from_fn(
        dim: usize,
        rank: usize,
        mut f: impl FnMut(&[usize]) -> Result<Jet>,
    ) -> Result<Tensor> {
        let len = dim.pow(rank as u32);
        let mut idx = vec![0usize; rank];
        let mut comps = Vec::with_capacity(len);
        for flat in 0..len {
            unflatten(flat, dim, &mut idx);
            comps.push(f(&idx)?);
        }
        Ok(Tensor { dim, rank, comps })
    }

    pub fn scalar(value: Jet) -> Tensor {
        Tensor {
            dim: 1,
            rank: 0,
            comps: vec![value],
        }
    }

    pub fn from_vec(dim: usize, rank: usize, comps: Vec<Jet>) -> Result<Tensor> {
        if comps.len() != dim.pow(rank as u32) {
            return Err(Error::Dimension(format!(
                "{} components for a rank-{rank} tensor in dimension {dim}",
                comps.len()
            )));
        }
        Ok(Tensor { dim, rank, comps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn comps(&self) -> &[Jet] {
        &self.comps
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[self.flat_index(idx)]
    }

    pub fn at2(&self, i: usize, j: usize) -> &Jet {
        &self.comps[i * self.dim + j]
    }

    pub fn degree(&self) -> usize {
        self.comps.iter().map(Jet::degree).min().unwrap_or(0)
    }

    pub fn nvars(&self) -> usize {
        self.comps[0].nvars()
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Tensor {
        Tensor {
            dim: self.dim,
            rank: self.rank,
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Tensor {
        self.map(|j| j.scale(c))
    }

    pub fn truncate(&self, degree: usize) -> Tensor {
        self.map(|j| j.truncate(degree))
    }

    pub fn try_add(&self, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other)?;
        Ok(Tensor {
            dim: self.dim,
            rank: self.rank,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn try_sub(&self, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other)?;
        Ok(Tensor {
            dim: self.dim,
            rank: self.rank,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Component-wise product with a scalar jet.
    pub fn mul_jet(&self, s: &Jet) -> Tensor {
        self.map(|j| j * s)
    }

    fn same_shape(&self, other: &Tensor) -> Result<()> {
        if self.dim != other.dim || self.rank != other.rank {
            return Err(Error::Dimension(format!(
                "tensor shapes differ: rank {} dim {} vs rank {} dim {}",
                self.rank, self.dim, other.rank, other.dim
            )));
        }
        Ok(())
    }

    /// Constant terms of all components.
    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(Jet::value).collect()
    }

    pub fn max_abs_value(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, j| m.max(j.value().abs()))
    }

    /// Keeps the first `n` values of every index and restricts jets to the
    /// slice where the last variable vanishes.
    pub fn pullback_restrict(&self, n: usize) -> Tensor {
        Tensor::from_fn(n, self.rank, |idx| self.get(idx).restrict_last())
    }

    /// Nested arrays of component values, for reports.
    pub fn to_json(&self) -> serde_json::Value {
        fn build(t: &Tensor, prefix: &mut Vec<usize>) -> serde_json::Value {
            if prefix.len() == t.rank {
                return serde_json::json!(t.get(prefix).value());
            }
            let mut arr = Vec::with_capacity(t.dim);
            for i in 0..t.dim {
                prefix.push(i);
                arr.push(build(t, prefix));
                prefix.pop();
            }
            serde_json::Value::Array(arr)
        }
        build(self, &mut Vec::new())
    }
}

fn unflatten(mut flat: usize, dim: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}

/// One coordinate axis of a chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
    /// Quadrature node count hint.
    pub nodes: usize,
}

impl Axis {
    pub fn periodic(lo: f64, hi: f64, nodes: usize) -> Axis {
        Axis {
            lo,
            hi,
            periodic: true,
            nodes,
        }
    }

    pub fn interval(lo: f64, hi: f64, nodes: usize) -> Axis {
        Axis {
            lo,
            hi,
            periodic: false,
            nodes,
        }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub vars: Vec<String>,
    pub axes: Vec<Axis>,
}

impl Chart {
    pub fn new(vars: Vec<String>, axes: Vec<Axis>) -> Result<Chart> {
        if vars.len() != axes.len() {
            return Err(Error::Dimension(format!(
                "chart has {} variables but {} axes",
                vars.len(),
                axes.len()
            )));
        }
        if vars.is_empty() || vars.len() > crate::jet::MAX_VARS {
            return Err(Error::Dimension(format!(
                "chart dimension {} outside 1..={}",
                vars.len(),
                crate::jet::MAX_VARS
            )));
        }
        for (v, a) in vars.iter().zip(&axes) {
            if !(a.hi > a.lo) {
                return Err(Error::Dimension(format!(
                    "axis `{v}` has empty domain [{}, {}]",
                    a.lo, a.hi
                )));
            }
        }
        Ok(Chart { vars, axes })
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn is_closed(&self) -> bool {
        self.axes.iter().all(|a| a.periodic || a.nodes > 0)
    }
}

/// A Riemannian metric on a chart.
#[derive(Clone)]
pub struct Metric {
    chart: Arc<Chart>,
    source: MetricSource,
}

#[derive(Clone)]
enum MetricSource {
    /// Upper-triangular components `g_ij`, `i ≤ j`, row-major.
    Components(Arc<Vec<Expr>>),
    Conformal { base: Arc<Metric>, phi: Expr },
    Induced(Arc<Embedding>),
}

fn upper_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

impl Metric {
    /// Builds a metric from a full symmetric matrix of expressions.
    pub fn from_matrix(chart: Arc<Chart>, rows: Vec<Vec<Expr>>) -> Result<Metric> {
        let m = chart.dim();
        if rows.len() != m || rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension(format!(
                "metric must be a {m}x{m} matrix"
            )));
        }
        let mut upper = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in i..m {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Dimension(format!(
                        "metric component ({i},{j}) differs from ({j},{i})"
                    )));
                }
                rows[i][j].validate(&chart.vars)?;
                upper.push(rows[i][j].clone());
            }
        }
        Ok(Metric {
            chart,
            source: MetricSource::Components(Arc::new(upper)),
        })
    }

    /// Diagonal metric from its diagonal entries.
    pub fn diagonal(chart: Arc<Chart>, diag: Vec<Expr>) -> Result<Metric> {
        let m = chart.dim();
        let rows = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if i == j { diag[i].clone() } else { Expr::Num(0.0) })
                    .collect()
            })
            .collect();
        Metric::from_matrix(chart, rows)
    }

    pub fn flat(chart: Arc<Chart>) -> Metric {
        let m = chart.dim();
        Metric::diagonal(chart, vec![Expr::Num(1.0); m]).expect("flat metric is valid")
    }

    pub(crate) fn induced(embedding: Arc<Embedding>) -> Metric {
        Metric {
            chart: embedding.surface().clone(),
            source: MetricSource::Induced(embedding),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// `e^{2φ} g`.
    pub fn conformal(&self, phi: Expr) -> Result<Metric> {
        phi.validate(&self.chart.vars)?;
        Ok(Metric {
            chart: self.chart.clone(),
            source: MetricSource::Conformal {
                base: Arc::new(self.clone()),
                phi,
            },
        })
    }

    /// Whether the components can be evaluated on arbitrary jet-valued
    /// coordinates (needed for ambient metrics).
    pub fn is_composable(&self) -> bool {
        match &self.source {
            MetricSource::Components(_) => true,
            MetricSource::Conformal { base, .. } => base.is_composable(),
            MetricSource::Induced(_) => false,
        }
    }

    /// Components evaluated at jet-valued coordinates.
    pub fn eval_on(&self, coords: &[Jet]) -> Result<Tensor> {
        let m = self.dim();
        match &self.source {
            MetricSource::Components(upper) => {
                let env = Env {
                    names: &self.chart.vars,
                    values: coords,
                };
                let vals = upper
                    .iter()
                    .map(|e| e.eval_jet(&env))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Tensor::from_fn(m, 2, |idx| {
                    vals[upper_index(m, idx[0], idx[1])].clone()
                }))
            }
            MetricSource::Conformal { base, phi } => {
                let g = base.eval_on(coords)?;
                let env = Env {
                    names: &self.chart.vars,
                    values: coords,
                };
                let factor = phi.eval_jet(&env)?.scale(2.0).exp();
                Ok(g.mul_jet(&factor))
            }
            MetricSource::Induced(_) => Err(Error::Other(
                "an induced metric cannot be evaluated on composed coordinates".into(),
            )),
        }
    }

    /// `g_ij` as jets at `point` truncated at `degree`.
    pub fn component_jets(&self, point: &[f64], degree: usize) -> Result<Tensor> {
        match &self.source {
            MetricSource::Induced(e) => e.induced_components(point, degree),
            MetricSource::Conformal { base, phi } if !self.is_composable() => {
                let g = base.component_jets(point, degree)?;
                let seeds = Jet::seed_point(point, degree)?;
                let env = Env {
                    names: &self.chart.vars,
                    values: &seeds,
                };
                let factor = phi.eval_jet(&env)?.scale(2.0).exp();
                Ok(g.mul_jet(&factor))
            }
            _ => {
                let seeds = Jet::seed_point(point, degree)?;
                self.eval_on(&seeds)
            }
        }
    }

    /// Metric jets with inverse and determinant at `point`.
    pub fn at(&self, point: &[f64], degree: usize) -> Result<PointGeometry> {
        if point.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, chart has {}",
                point.len(),
                self.dim()
            )));
        }
        PointGeometry::new(point.to_vec(), self.component_jets(point, degree)?)
    }

    pub fn sqrt_det(&self, point: &[f64]) -> Result<f64> {
        Ok(self.at(point, 0)?.sqrt_det())
    }
}

/// Inverts a symmetric positive-definite matrix of jets (Gauss–Jordan without
/// pivoting) and returns `(inverse, determinant)`.
fn invert_spd(g: &Tensor, point: &[f64]) -> Result<(Tensor, Jet)> {
    let m = g.dim();
    let nv = g.nvars();
    let d = g.degree();
    let mut a: Vec<Vec<Jet>> = (0..m)
        .map(|i| (0..m).map(|j| g.at2(i, j).truncate(d)).collect())
        .collect();
    let mut b: Vec<Vec<Jet>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }, nv, d))
                .collect()
        })
        .collect();
    let diag_max = (0..m).fold(0.0f64, |acc, i| acc.max(g.at2(i, i).value().abs()));
    let mut det = Jet::constant(1.0, nv, d);
    for k in 0..m {
        let pivot = a[k][k].clone();
        det = &det * &pivot;
        if !(pivot.value() > 1e-13 * diag_max) {
            return Err(Error::NotPositiveDefinite {
                point: point.to_vec(),
                minor: k + 1,
                value: det.value(),
            });
        }
        let inv = pivot.recip()?;
        for j in 0..m {
            a[k][j] = &a[k][j] * &inv;
            b[k][j] = &b[k][j] * &inv;
        }
        for r in 0..m {
            if r == k {
                continue;
            }
            let factor = -&a[r][k];
            if factor.max_abs() == 0.0 {
                continue;
            }
            for j in 0..m {
                let (ak, bk) = (a[k][j].clone(), b[k][j].clone());
                a[r][j].fma(&factor, &ak);
                b[r][j].fma(&factor, &bk);
            }
        }
    }
    let inv = Tensor::from_fn(m, 2, |idx| b[idx[0]][idx[1]].clone());
    Ok((inv, det))
}

/// Metric jets at a point together with lazily derived connection and
/// curvature.
pub struct PointGeometry {
    point: Vec<f64>,
    g: Tensor,
    ginv: Tensor,
    det: Jet,
    christoffel: OnceCell<Tensor>,
    pub(crate) riemann: OnceCell<Tensor>,
    pub(crate) ricci: OnceCell<Tensor>,
    pub(crate) scal: OnceCell<Jet>,
    pub(crate) schouten: OnceCell<Tensor>,
    pub(crate) weyl: OnceCell<Tensor>,
}

impl PointGeometry {
    pub fn new(point: Vec<f64>, g: Tensor) -> Result<PointGeometry> {
        if g.rank() != 2 {
            return Err(Error::Dimension("metric must have rank 2".into()));
        }
        let (ginv, det) = invert_spd(&g, &point)?;
        Ok(PointGeometry {
            point,
            g,
            ginv,
            det,
            christoffel: OnceCell::new(),
            riemann: OnceCell::new(),
            ricci: OnceCell::new(),
            scal: OnceCell::new(),
            schouten: OnceCell::new(),
            weyl: OnceCell::new(),
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn nvars(&self) -> usize {
        self.g.nvars()
    }

    pub fn degree(&self) -> usize {
        self.g.degree()
    }

    pub fn metric(&self) -> &Tensor {
        &self.g
    }

    pub fn inverse(&self) -> &Tensor {
        &self.ginv
    }

    pub fn det(&self) -> &Jet {
        &self.det
    }

    pub fn sqrt_det(&self) -> f64 {
        self.det.value().sqrt()
    }

    pub fn constant(&self, c: f64) -> Jet {
        Jet::constant(c, self.nvars(), self.degree())
    }

    fn need(&self, what: &str, needed: usize) -> Result<()> {
        if self.degree() < needed {
            return Err(Error::degree(what, needed, self.degree()));
        }
        Ok(())
    }

    /// `Γ^k_{ij}`, stored with index order `[k, i, j]`.
    pub fn christoffel(&self) -> Result<&Tensor> {
        self.christoffel.get_or_try_init(|| {
            self.need("Christoffel symbols", 1)?;
            let m = self.dim();
            let dg: Vec<Tensor> = (0..m)
                .map(|c| {
                    Tensor::try_from_fn(m, 2, |idx| {
                        if idx[0] <= idx[1] {
                            self.g.get(idx).partial(c)
                        } else {
                            Ok(Jet::zero(self.nvars(), 0))
                        }
                    })
                })
                .collect::<Result<_>>()?;
            let sym = |c: usize, a: usize, b: usize| -> &Jet {
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                dg[c].at2(a, b)
            };
            // First kind Γ_{l,ij} for i ≤ j.
            let mut first = vec![None; m * m * m];
            for l in 0..m {
                for i in 0..m {
                    for j in i..m {
                        let v = (sym(i, j, l) + sym(j, i, l) - sym(l, i, j)).scale(0.5);
                        first[(l * m + i) * m + j] = Some(v);
                    }
                }
            }
            let d1 = self.degree() - 1;
            let mut upper = vec![None; m * m * m];
            for k in 0..m {
                for i in 0..m {
                    for j in i..m {
                        let mut acc = Jet::zero(self.nvars(), d1);
                        for l in 0..m {
                            acc.fma(
                                self.ginv.at2(k, l),
                                first[(l * m + i) * m + j].as_ref().expect("filled"),
                            );
                        }
                        upper[(k * m + i) * m + j] = Some(acc);
                    }
                }
            }
            Ok(Tensor::from_fn(m, 3, |idx| {
                let (i, j) = if idx[1] <= idx[2] {
                    (idx[1], idx[2])
                } else {
                    (idx[2], idx[1])
                };
                upper[(idx[0] * m + i) * m + j].clone().expect("filled")
            }))
        })
    }

    /// `(∇T)_{c a_1 … a_r}`, derivative index first.
    pub fn covariant_derivative(&self, t: &Tensor) -> Result<Tensor> {
        let m = self.dim();
        if t.dim() != m {
            return Err(Error::Dimension("tensor and metric dimensions differ".into()));
        }
        if t.degree() == 0 {
            return Err(Error::degree("covariant derivative", 1, 0));
        }
        let gamma = self.christoffel()?;
        let d = t.degree() - 1;
        let neg_gamma = gamma.map(|j| j.truncate(d).scale(-1.0));
        let r = t.rank();
        let mut shifted = vec![0usize; r];
        Tensor::try_from_fn(m, r + 1, |idx| {
            let c = idx[0];
            let a = &idx[1..];
            let mut acc = t.get(a).partial(c)?;
            for p in 0..r {
                shifted.copy_from_slice(a);
                for q in 0..m {
                    shifted[p] = q;
                    acc.fma(neg_gamma.get(&[q, c, a[p]]), t.get(&shifted));
                }
            }
            Ok(acc)
        })
    }

    /// `(∇_v T)_{a_1 … a_r}` for a vector `v^c`.
    pub fn covariant_derivative_along(&self, v: &[Jet], t: &Tensor) -> Result<Tensor> {
        let m = self.dim();
        if v.len() != m || t.dim() != m {
            return Err(Error::Dimension("vector, tensor and metric dimensions differ".into()));
        }
        if t.degree() == 0 {
            return Err(Error::degree("covariant derivative", 1, 0));
        }
        let gamma = self.christoffel()?;
        let d = t.degree() - 1;
        let nv = self.nvars();
        // -v^c Γ^q_{c a}
        let conn = Tensor::from_fn(m, 2, |idx| {
            let mut acc = Jet::zero(nv, d);
            for (c, vc) in v.iter().enumerate() {
                acc.fma(vc, &gamma.get(&[idx[0], c, idx[1]]).truncate(d));
            }
            acc.scale(-1.0)
        });
        let partials: Vec<Vec<Jet>> = (0..m)
            .map(|c| t.comps().iter().map(|j| j.partial(c)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let r = t.rank();
        let mut shifted = vec![0usize; r];
        Ok(Tensor::from_fn(m, r, |a| {
            let flat = t.flat_index(a);
            let mut acc = Jet::zero(nv, d);
            for (c, vc) in v.iter().enumerate() {
                acc.fma(vc, &partials[c][flat]);
            }
            for p in 0..r {
                shifted.copy_from_slice(a);
                for q in 0..m {
                    shifted[p] = q;
                    acc.fma(conn.at2(q, a[p]), t.get(&shifted));
                }
            }
            acc
        }))
    }

    /// `df` as a 1-form.
    pub fn gradient(&self, f: &Jet) -> Result<Tensor> {
        Tensor::try_from_fn(self.dim(), 1, |idx| f.partial(idx[0]))
    }

    pub fn hessian(&self, f: &Jet) -> Result<Tensor> {
        let df = self.gradient(f)?;
        self.covariant_derivative(&df)
    }

    /// `g^{ij} T_{ij}`.
    pub fn trace(&self, t: &Tensor) -> Result<Jet> {
        if t.rank() != 2 {
            return Err(Error::Dimension("trace needs a rank-2 tensor".into()));
        }
        let m = self.dim();
        let mut acc = Jet::zero(self.nvars(), t.degree().min(self.degree()));
        for i in 0..m {
            for j in 0..m {
                acc.fma(self.ginv.at2(i, j), t.at2(i, j));
            }
        }
        Ok(acc)
    }

    pub fn laplacian(&self, f: &Jet) -> Result<Jet> {
        if f.degree() < 2 {
            return Err(Error::degree("Laplacian", 2, f.degree()));
        }
        self.trace(&self.hessian(f)?)
    }

    /// `δω = g^{ij}∇_iω_j` for 1-forms and `(δT)_j = g^{ik}∇_iT_{kj}` for
    /// symmetric 2-tensors.
    pub fn divergence(&self, t: &Tensor) -> Result<Tensor> {
        let m = self.dim();
        match t.rank() {
            1 => {
                let nabla = self.covariant_derivative(t)?;
                Ok(Tensor::scalar(self.trace(&nabla)?))
            }
            2 => {
                let nabla = self.covariant_derivative(t)?;
                let d = nabla.degree();
                Ok(Tensor::from_fn(m, 1, |idx| {
                    let j = idx[0];
                    let mut acc = Jet::zero(self.nvars(), d);
                    for i in 0..m {
                        for k in 0..m {
                            acc.fma(self.ginv.at2(i, k), nabla.get(&[i, k, j]));
                        }
                    }
                    acc
                }))
            }
            r => Err(Error::Dimension(format!(
                "divergence is defined for 1-forms and symmetric 2-tensors, got rank {r}"
            ))),
        }
    }

    /// Divergence of a 1-form as a scalar jet.
    pub fn div1(&self, omega: &Tensor) -> Result<Jet> {
        if omega.rank() != 1 {
            return Err(Error::Dimension("div1 needs a 1-form".into()));
        }
        Ok(self.divergence(omega)?.comps()[0].clone())
    }

    /// `δδT` for a symmetric 2-tensor.
    pub fn double_divergence(&self, t: &Tensor) -> Result<Jet> {
        let one_form = self.divergence(t)?;
        self.div1(&one_form)
    }

    /// The 1-form `T(df^♯)_j = T_{jk} g^{kl} ∂_l f`.
    pub fn apply_to_gradient(&self, t: &Tensor, f: &Jet) -> Result<Tensor> {
        let df = self.gradient(f)?;
        self.apply(t, &df)
    }

    /// `T_{jk} g^{kl} ω_l`.
    pub fn apply(&self, t: &Tensor, omega: &Tensor) -> Result<Tensor> {
        if t.rank() != 2 || omega.rank() != 1 {
            return Err(Error::Dimension("apply needs a 2-tensor and a 1-form".into()));
        }
        let m = self.dim();
        let up = self.raise_one(omega);
        let d = t.degree().min(up[0].degree());
        Ok(Tensor::from_fn(m, 1, |idx| {
            let mut acc = Jet::zero(self.nvars(), d);
            for k in 0..m {
                acc.fma(t.at2(idx[0], k), &up[k]);
            }
            acc
        }))
    }

    /// `δ(T df)`.
    pub fn div_apply(&self, t: &Tensor, f: &Jet) -> Result<Jet> {
        let omega = self.apply_to_gradient(t, f)?;
        self.div1(&omega)
    }

    fn raise_one(&self, omega: &Tensor) -> Vec<Jet> {
        let m = self.dim();
        let d = omega.degree().min(self.degree());
        (0..m)
            .map(|k| {
                let mut acc = Jet::zero(self.nvars(), d);
                for l in 0..m {
                    acc.fma(self.ginv.at2(k, l), omega.get(&[l]));
                }
                acc
            })
            .collect()
    }

    /// Raises every index of `t`.
    pub fn raise_all(&self, t: &Tensor) -> Tensor {
        let m = self.dim();
        let mut cur = t.clone();
        for slot in 0..t.rank() {
            let d = cur.degree().min(self.degree());
            let prev = cur;
            let mut shifted = vec![0usize; t.rank()];
            cur = Tensor::from_fn(m, t.rank(), |idx| {
                shifted.copy_from_slice(idx);
                let mut acc = Jet::zero(self.nvars(), d);
                for l in 0..m {
                    shifted[slot] = l;
                    acc.fma(self.ginv.at2(idx[slot], l), prev.get(&shifted));
                }
                acc
            });
        }
        cur
    }

    /// Full contraction `(T, S)` using the inverse metric on every index pair.
    pub fn inner(&self, a: &Tensor, b: &Tensor) -> Result<Jet> {
        if a.rank() != b.rank() || a.dim() != b.dim() {
            return Err(Error::Dimension(format!(
                "inner product of rank {} and rank {} tensors",
                a.rank(),
                b.rank()
            )));
        }
        if a.rank() == 0 {
            return Ok(&a.comps()[0] * &b.comps()[0]);
        }
        let up = self.raise_all(a);
        let d = up.degree().min(b.degree());
        let mut acc = Jet::zero(self.nvars(), d);
        for (x, y) in up.comps().iter().zip(b.comps()) {
            acc.fma(x, y);
        }
        Ok(acc)
    }

    pub fn norm2(&self, t: &Tensor) -> Result<Jet> {
        self.inner(t, t)
    }

    /// `(A∘B)_{ij} = A_{ik} g^{kl} B_{lj}`.
    pub fn compose(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        if a.rank() != 2 || b.rank() != 2 {
            return Err(Error::Dimension("compose needs 2-tensors".into()));
        }
        let m = self.dim();
        let d = a.degree().min(b.degree()).min(self.degree());
        let nv = self.nvars();
        // bt[j][k] = B^k_j
        let bt = Tensor::from_fn(m, 2, |idx| {
            let mut acc = Jet::zero(nv, d);
            for l in 0..m {
                acc.fma(self.ginv.at2(idx[1], l), b.at2(l, idx[0]));
            }
            acc
        });
        Ok(Tensor::from_fn(m, 2, |idx| {
            let mut acc = Jet::zero(nv, d);
            for k in 0..m {
                acc.fma(a.at2(idx[0], k), bt.at2(idx[1], k));
            }
            acc
        }))
    }
}

/// A scalar field evaluable as jets at any chart point.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, point: &[f64], degree: usize) -> Result<Jet>;

    fn value(&self, point: &[f64]) -> Result<f64> {
        Ok(self.eval(point, 0)?.value())
    }
}

/// A closed-form scalar field on a chart.
#[derive(Clone, Debug)]
pub struct ExprField {
    vars: Vec<String>,
    expr: Expr,
}

impl ExprField {
    pub fn new(chart: &Chart, expr: Expr) -> Result<ExprField> {
        expr.validate(&chart.vars)?;
        Ok(ExprField {
            vars: chart.vars.clone(),
            expr,
        })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl ScalarField for ExprField {
    fn dim(&self) -> usize {
        self.vars.len()
    }

    fn eval(&self, point: &[f64], degree: usize) -> Result<Jet> {
        let seeds = Jet::seed_point(point, degree)?;
        self.expr.eval_jet(&Env {
            names: &self.vars,
            values: &seeds,
        })
    }
}
