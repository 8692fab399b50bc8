//! Built-in test geometries and user-defined scenarios.
//!
//! Catalog names take optional arguments, e.g. `ROUND_S(4,1)` or
//! `GRAPH(4,perturbed)`. Surface variables are `x1..xn`, ambient variables
//! `y1..y(n+1)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{Axis, Chart, Metric};
use crate::hypersurface::Embedding;
use crate::operators::GeometrySource;

/// A geometry under test together with the smooth functions used to build
/// random conformal factors and test functions.
#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub source: GeometrySource,
    pub euler: Option<i64>,
    /// Globally smooth functions on the surface.
    pub surface_basis: Vec<Expr>,
    /// Globally smooth functions on the ambient space (embedded scenarios).
    pub ambient_basis: Vec<Expr>,
    /// Whether the embedding is totally umbilic by construction.
    pub umbilic: bool,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("embedded", &self.is_embedded())
            .finish()
    }
}

/// Catalog entries with a one-line description.
pub const CATALOG: &[(&str, &str)] = &[
    ("FLAT_T4", "flat 4-torus of side 2π"),
    ("FLAT_T(n)", "flat n-torus of side 2π"),
    ("TWISTED_T(n)", "n-torus with a generic non-conformally-flat metric"),
    ("ROUND_S(n,r)", "round n-sphere of radius r in iterated polar coordinates"),
    ("SPHERE_IN_FLAT(n,r)", "round n-sphere of radius r in flat R^(n+1), outward normal"),
    ("SLICE(S2xS2[,a,b])", "{t=0} in R × S²(a) × S²(b), defaults a=1, b=0.75"),
    ("SLICE(PS3)", "{t=0} in R × (S³ with a conformal bump)"),
    ("GRAPH(n[,flat|perturbed[,u]])", "graph of u over T^n in T^(n+1), default perturbed ambient"),
    ("CONF_PERTURBED(base[,phi])", "base scenario with metric (or ambient metric) scaled by e^(2 phi)"),
];

fn e(s: &str) -> Expr {
    Expr::parse(s).expect("catalog expression parses")
}

fn vars(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Splits `NAME(a,b(c,d))` into `("NAME", ["a", "b(c,d)"])`.
pub fn split_name(spec: &str) -> Result<(String, Vec<String>)> {
    let spec = spec.trim();
    let Some(open) = spec.find('(') else {
        return Ok((spec.to_string(), Vec::new()));
    };
    if !spec.ends_with(')') {
        return Err(Error::UnknownScenario(spec.to_string()));
    }
    let head = spec[..open].trim().to_string();
    let body = &spec[open + 1..spec.len() - 1];
    let mut args = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in body.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::UnknownScenario(spec.to_string()));
                }
                cur.push(ch);
            }
            ',' if depth == 0 => {
                args.push(cur.trim().to_string());
                cur.clear();
            }
            _ => cur.push(ch),
        }
    }
    if depth != 0 {
        return Err(Error::UnknownScenario(spec.to_string()));
    }
    if !cur.trim().is_empty() || !args.is_empty() {
        args.push(cur.trim().to_string());
    }
    Ok((head, args))
}

fn arg_usize(spec: &str, args: &[String], i: usize, default: Option<usize>) -> Result<usize> {
    match args.get(i) {
        Some(a) => a.parse().map_err(|_| {
            Error::UnknownScenario(format!("{spec}: argument {} must be an integer", i + 1))
        }),
        None => default.ok_or_else(|| {
            Error::UnknownScenario(format!("{spec}: missing argument {}", i + 1))
        }),
    }
}

fn arg_f64(spec: &str, args: &[String], i: usize, default: f64) -> Result<f64> {
    match args.get(i) {
        Some(a) => a.parse().map_err(|_| {
            Error::UnknownScenario(format!("{spec}: argument {} must be a number", i + 1))
        }),
        None => Ok(default),
    }
}

fn check_dim(spec: &str, n: usize, lo: usize, hi: usize) -> Result<()> {
    if n < lo || n > hi {
        return Err(Error::UnknownScenario(format!(
            "{spec}: dimension must lie in {lo}..={hi}"
        )));
    }
    Ok(())
}

/// Default quadrature nodes per periodic and per polar axis.
const PERIODIC_NODES: usize = 12;
const POLAR_NODES: usize = 12;
const SLICE_NODES: usize = 8;

fn torus_chart(prefix: &str, n: usize) -> Arc<Chart> {
    Arc::new(
        Chart::new(vars(prefix, n), vec![Axis::periodic(0.0, 2.0 * PI, PERIODIC_NODES); n])
            .expect("torus chart"),
    )
}

/// Iterated polar chart of `S^n`: `n−1` polar angles and one azimuth.
fn sphere_chart(prefix: &str, n: usize) -> Arc<Chart> {
    let mut axes = vec![Axis::interval(0.0, PI, POLAR_NODES); n - 1];
    axes.push(Axis::periodic(0.0, 2.0 * PI, PERIODIC_NODES));
    Arc::new(Chart::new(vars(prefix, n), axes).expect("sphere chart"))
}

/// Cartesian coordinates `X_1..X_{n+1}` of the unit sphere in polar
/// variables `v[0..n]`.
fn sphere_cartesian(v: &[String]) -> Vec<String> {
    let n = v.len();
    let mut out = Vec::with_capacity(n + 1);
    let mut prefix = String::new();
    for (k, name) in v.iter().enumerate() {
        if k + 1 < n {
            out.push(format!("{prefix}cos({name})"));
            prefix = format!("{prefix}sin({name})*");
        } else {
            out.push(format!("{prefix}cos({name})"));
            out.push(format!("{prefix}sin({name})"));
        }
    }
    out
}

/// Diagonal entries of the round metric of radius `r` on polar variables.
fn sphere_diagonal(v: &[String], r: f64) -> Vec<String> {
    let mut diag = Vec::with_capacity(v.len());
    let mut prefix = format!("{}", r * r);
    for name in v {
        diag.push(prefix.clone());
        prefix = format!("{prefix}*sin({name})^2");
    }
    diag
}

fn torus_basis(v: &[String]) -> Vec<Expr> {
    let n = v.len();
    let mut out = Vec::new();
    for (i, name) in v.iter().enumerate() {
        let next = &v[(i + 1) % n];
        out.push(e(&format!("sin({name} + 0.3)")));
        out.push(e(&format!("cos({name} - {next})")));
    }
    out
}

fn sphere_basis(v: &[String]) -> Vec<Expr> {
    let xs = sphere_cartesian(v);
    let mut out: Vec<Expr> = xs.iter().map(|s| e(s)).collect();
    for k in 0..xs.len().min(3) {
        let l = (k + 1) % xs.len();
        out.push(e(&format!("({})*({})", xs[k], xs[l])));
    }
    out
}

/// `δ + small trigonometric perturbation`, generic and positive definite.
fn twisted_matrix(v: &[String]) -> Vec<Vec<Expr>> {
    let n = v.len();
    let mut rows = vec![vec![e("0"); n]; n];
    for i in 0..n {
        let a = &v[(i + 1) % n];
        let b = &v[(i + 2) % n];
        rows[i][i] = e(&format!("1 + 0.08*sin({a}) + 0.05*cos({b} + {})", v[i]));
        if i + 1 < n {
            let c = &v[(i + 2) % n];
            let off = e(&format!("0.04*cos({c}) + 0.03*sin({})", v[i]));
            rows[i][i + 1] = off.clone();
            rows[i + 1][i] = off;
        }
    }
    rows
}

/// Builds a catalog scenario from its name.
pub fn build(spec: &str) -> Result<Scenario> {
    let (head, args) = split_name(spec)?;
    let name = spec.trim().replace(' ', "");
    match head.as_str() {
        "FLAT_T4" if args.is_empty() => flat_torus(&name, 4),
        "FLAT_T" => {
            let n = arg_usize(spec, &args, 0, None)?;
            check_dim(spec, n, 2, 5)?;
            flat_torus(&name, n)
        }
        "TWISTED_T" => {
            let n = arg_usize(spec, &args, 0, None)?;
            check_dim(spec, n, 2, 5)?;
            let chart = torus_chart("x", n);
            let metric = Metric::from_matrix(chart.clone(), twisted_matrix(&chart.vars))?;
            Ok(Scenario {
                name,
                surface_basis: torus_basis(&chart.vars),
                source: GeometrySource::Intrinsic(metric),
                euler: Some(0),
                ambient_basis: Vec::new(),
                umbilic: false,
            })
        }
        "ROUND_S" => {
            let n = arg_usize(spec, &args, 0, None)?;
            check_dim(spec, n, 2, 5)?;
            let r = arg_f64(spec, &args, 1, 1.0)?;
            let chart = sphere_chart("x", n);
            let diag = sphere_diagonal(&chart.vars, r).iter().map(|s| e(s)).collect();
            let metric = Metric::diagonal(chart.clone(), diag)?;
            Ok(Scenario {
                name,
                surface_basis: sphere_basis(&chart.vars),
                source: GeometrySource::Intrinsic(metric),
                euler: Some(if n % 2 == 0 { 2 } else { 0 }),
                ambient_basis: Vec::new(),
                umbilic: false,
            })
        }
        "SPHERE_IN_FLAT" => {
            let n = arg_usize(spec, &args, 0, None)?;
            check_dim(spec, n, 2, 5)?;
            let r = arg_f64(spec, &args, 1, 1.0)?;
            sphere_in_flat(&name, n, r)
        }
        "SLICE" => slice(&name, spec, &args),
        "GRAPH" => graph(&name, spec, &args),
        "CONF_PERTURBED" => {
            let base_spec = args
                .first()
                .ok_or_else(|| Error::UnknownScenario(format!("{spec}: missing base")))?;
            let base = build(base_spec)?;
            let phi = match args.get(1) {
                Some(s) => Expr::parse(s)?,
                None => default_perturbation(&base),
            };
            conformally_perturbed(&name, base, phi)
        }
        _ => Err(Error::UnknownScenario(spec.to_string())),
    }
}

fn flat_torus(name: &str, n: usize) -> Result<Scenario> {
    let chart = torus_chart("x", n);
    Ok(Scenario {
        name: name.to_string(),
        surface_basis: torus_basis(&chart.vars),
        source: GeometrySource::Intrinsic(Metric::flat(chart)),
        euler: Some(0),
        ambient_basis: Vec::new(),
        umbilic: false,
    })
}

fn ambient_flat_chart(n: usize, half_width: f64) -> Arc<Chart> {
    Arc::new(
        Chart::new(
            vars("y", n),
            vec![Axis::interval(-half_width, half_width, 8); n],
        )
        .expect("ambient chart"),
    )
}

fn sphere_in_flat(name: &str, n: usize, r: f64) -> Result<Scenario> {
    let surface = sphere_chart("x", n);
    let ambient = Metric::flat(ambient_flat_chart(n + 1, 4.0 * r.max(1.0)));
    let comps: Vec<Expr> = sphere_cartesian(&surface.vars)
        .iter()
        .map(|s| e(&format!("{r}*{s}")))
        .collect();
    let emb = outward(Embedding::new(surface.clone(), ambient, comps, 1.0)?)?;
    let ys = vars("y", n + 1);
    let mut ambient_basis: Vec<Expr> = ys.iter().map(|y| e(&format!("{y}/{r}"))).collect();
    ambient_basis.push(e(&format!("sin({} + 0.5*{})", ys[0], ys[n])));
    ambient_basis.push(e(&format!("({}*{})/{}", ys[1], ys[n], r * r)));
    ambient_basis.push(e(&format!("({0}*{0} + {1}*{1})/{2}", ys[0], ys[1], r * r)));
    Ok(Scenario {
        name: name.to_string(),
        surface_basis: sphere_basis(&surface.vars),
        source: GeometrySource::Embedded(Arc::new(emb)),
        euler: Some(if n.is_multiple_of(2) { 2 } else { 0 }),
        ambient_basis,
        umbilic: true,
    })
}

/// Flips the orientation so that the normal points away from the origin of
/// the ambient chart at a generic point.
fn outward(emb: Embedding) -> Result<Embedding> {
    let n = emb.n();
    let x: Vec<f64> = (0..n).map(|i| 0.9 + 0.1 * i as f64).collect();
    let g = emb.geometry(&x, 1)?;
    let p = emb.point(&x)?;
    let nu = g.normal_in_ambient_chart();
    let dot: f64 = p.iter().zip(&nu).map(|(a, b)| a * b).sum();
    if dot < 0.0 {
        emb.with_orientation(-emb.orientation())
    } else {
        Ok(emb)
    }
}

fn slice(name: &str, spec: &str, args: &[String]) -> Result<Scenario> {
    let kind = args
        .first()
        .ok_or_else(|| Error::UnknownScenario(format!("{spec}: missing factor spec")))?;
    match kind.as_str() {
        "S2xS2" => {
            let a = arg_f64(spec, args, 1, 1.0)?;
            let b = arg_f64(spec, args, 2, 0.75)?;
            let surface = Arc::new(Chart::new(
                vars("x", 4),
                vec![
                    Axis::interval(0.0, PI, SLICE_NODES),
                    Axis::periodic(0.0, 2.0 * PI, SLICE_NODES),
                    Axis::interval(0.0, PI, SLICE_NODES),
                    Axis::periodic(0.0, 2.0 * PI, SLICE_NODES),
                ],
            )?);
            let ambient_chart = Arc::new(Chart::new(
                vars("y", 5),
                vec![
                    Axis::interval(-1.0, 1.0, 8),
                    Axis::interval(0.0, PI, POLAR_NODES),
                    Axis::periodic(0.0, 2.0 * PI, PERIODIC_NODES),
                    Axis::interval(0.0, PI, POLAR_NODES),
                    Axis::periodic(0.0, 2.0 * PI, PERIODIC_NODES),
                ],
            )?);
            let (a2, b2) = (a * a, b * b);
            let ambient = Metric::diagonal(
                ambient_chart,
                vec![
                    e("1"),
                    e(&format!("{a2}")),
                    e(&format!("{a2}*sin(y2)^2")),
                    e(&format!("{b2}")),
                    e(&format!("{b2}*sin(y4)^2")),
                ],
            )?;
            let emb = Embedding::new(
                surface.clone(),
                ambient,
                vec![e("0"), e("x1"), e("x2"), e("x3"), e("x4")],
                1.0,
            )?;
            let f1 = sphere_cartesian(&["y2".into(), "y3".into()]);
            let f2 = sphere_cartesian(&["y4".into(), "y5".into()]);
            let ambient_basis = vec![
                e(&format!("y1*({})", f1[0])),
                e(&format!("sin(y1 + 0.4)*({})", f2[1])),
                e(&format!("({})*({})", f1[1], f2[0])),
                e(&format!("y1^2*({})", f2[2])),
                e(&f1[2]),
                e(&format!("cos(y1)*({})", f2[0])),
            ];
            let s1 = sphere_cartesian(&["x1".into(), "x2".into()]);
            let s2 = sphere_cartesian(&["x3".into(), "x4".into()]);
            let surface_basis = vec![
                e(&s1[0]),
                e(&s2[1]),
                e(&format!("({})*({})", s1[1], s2[0])),
                e(&s1[2]),
                e(&format!("({})*({})", s1[0], s2[2])),
            ];
            Ok(Scenario {
                name: name.to_string(),
                source: GeometrySource::Embedded(Arc::new(emb)),
                euler: Some(4),
                surface_basis,
                ambient_basis,
                umbilic: true,
            })
        }
        "PS3" => {
            let surface = sphere_chart("x", 3);
            let ambient_chart = Arc::new(Chart::new(
                vars("y", 4),
                vec![
                    Axis::interval(-1.0, 1.0, 8),
                    Axis::interval(0.0, PI, POLAR_NODES),
                    Axis::interval(0.0, PI, POLAR_NODES),
                    Axis::periodic(0.0, 2.0 * PI, PERIODIC_NODES),
                ],
            )?);
            let sv = vec!["y2".to_string(), "y3".to_string(), "y4".to_string()];
            let cart = sphere_cartesian(&sv);
            let bump = format!("exp(2*(0.15*{} + 0.1*{}))", cart[0], cart[2]);
            let mut diag = vec![e("1")];
            for d in sphere_diagonal(&sv, 1.0) {
                diag.push(e(&format!("{bump}*{d}")));
            }
            let ambient = Metric::diagonal(ambient_chart, diag)?;
            let emb = Embedding::new(
                surface.clone(),
                ambient,
                vec![e("0"), e("x1"), e("x2"), e("x3")],
                1.0,
            )?;
            let ambient_basis = vec![
                e(&format!("y1*({})", cart[0])),
                e(&format!("sin(y1 + 0.4)*({})", cart[1])),
                e(&format!("({})*({})", cart[2], cart[3])),
                e(&format!("y1^2*({})", cart[3])),
                e(&format!("cos(y1)*({})", cart[2])),
            ];
            Ok(Scenario {
                name: name.to_string(),
                source: GeometrySource::Embedded(Arc::new(emb)),
                euler: Some(0),
                surface_basis: sphere_basis(&surface.vars),
                ambient_basis,
                umbilic: true,
            })
        }
        _ => Err(Error::UnknownScenario(format!(
            "{spec}: unknown slice `{kind}` (known: S2xS2, PS3)"
        ))),
    }
}

fn default_graph_height(v: &[String]) -> String {
    let n = v.len();
    let mut terms = vec![format!("0.1*sin({})", v[0])];
    terms.push(format!("0.08*cos({} + 0.2)", v[1 % n]));
    if n >= 3 {
        terms.push(format!("0.05*sin({} - {})", v[2], v[0]));
    }
    if n >= 4 {
        terms.push(format!("0.04*cos({} + {})", v[3], v[1]));
    }
    terms.join(" + ")
}

fn graph(name: &str, spec: &str, args: &[String]) -> Result<Scenario> {
    let n = arg_usize(spec, args, 0, None)?;
    check_dim(spec, n, 2, 5)?;
    let ambient_kind = args.get(1).map(String::as_str).unwrap_or("perturbed");
    let surface = torus_chart("x", n);
    let ambient_chart = torus_chart("y", n + 1);
    let ambient = match ambient_kind {
        "flat" => Metric::flat(ambient_chart.clone()),
        "perturbed" => Metric::from_matrix(
            ambient_chart.clone(),
            twisted_matrix(&ambient_chart.vars),
        )?,
        other => {
            return Err(Error::UnknownScenario(format!(
                "{spec}: ambient must be `flat` or `perturbed`, got `{other}`"
            )))
        }
    };
    let u = match args.get(2) {
        Some(s) => Expr::parse(s)?,
        None => e(&default_graph_height(&surface.vars)),
    };
    let mut comps: Vec<Expr> = surface.vars.iter().map(|v| Expr::var(v)).collect();
    comps.push(u);
    let emb = Embedding::new(surface.clone(), ambient, comps, 1.0)?;
    let ys = &ambient_chart.vars;
    let mut ambient_basis = torus_basis(ys);
    ambient_basis.push(e(&format!("sin({})*cos({})", ys[n], ys[0])));
    Ok(Scenario {
        name: name.to_string(),
        source: GeometrySource::Embedded(Arc::new(emb)),
        euler: Some(0),
        surface_basis: torus_basis(&surface.vars),
        ambient_basis,
        umbilic: false,
    })
}

fn default_perturbation(base: &Scenario) -> Expr {
    let basis = if base.is_embedded() {
        &base.ambient_basis
    } else {
        &base.surface_basis
    };
    let weights = [0.12, -0.08, 0.06, 0.05];
    let mut acc: Option<Expr> = None;
    for (w, b) in weights.iter().zip(basis) {
        let term = Expr::num(*w) * b.clone();
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    acc.unwrap_or_else(|| Expr::num(0.0))
}

fn conformally_perturbed(name: &str, base: Scenario, phi: Expr) -> Result<Scenario> {
    let source = match &base.source {
        GeometrySource::Intrinsic(m) => GeometrySource::Intrinsic(m.conformal(phi)?),
        GeometrySource::Embedded(emb) => GeometrySource::Embedded(Arc::new(emb.rescaled(&phi)?)),
    };
    Ok(Scenario {
        name: name.to_string(),
        source,
        ..base
    })
}

/// User-defined scenario, as written in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioDef {
    Intrinsic {
        name: String,
        vars: Vec<String>,
        axes: Vec<Axis>,
        /// Full symmetric matrix of component expressions.
        metric: Vec<Vec<String>>,
        #[serde(default)]
        euler: Option<i64>,
        #[serde(default)]
        basis: Option<Vec<String>>,
    },
    Embedded {
        name: String,
        surface_vars: Vec<String>,
        surface_axes: Vec<Axis>,
        ambient_vars: Vec<String>,
        ambient_axes: Vec<Axis>,
        ambient_metric: Vec<Vec<String>>,
        embedding: Vec<String>,
        #[serde(default = "default_orientation")]
        orientation: f64,
        #[serde(default)]
        euler: Option<i64>,
        #[serde(default)]
        basis: Option<Vec<String>>,
        #[serde(default)]
        ambient_basis: Option<Vec<String>>,
        #[serde(default)]
        umbilic: bool,
    },
}

fn default_orientation() -> f64 {
    1.0
}

fn parse_all(path: &str, items: &[String]) -> Result<Vec<Expr>> {
    items
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Expr::parse(s).map_err(|err| Error::config(format!("{path}[{i}]"), err.to_string()))
        })
        .collect()
}

fn parse_matrix(path: &str, rows: &[Vec<String>]) -> Result<Vec<Vec<Expr>>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| parse_all(&format!("{path}[{i}]"), r))
        .collect()
}

fn default_basis(chart: &Chart) -> Vec<Expr> {
    let mut out = Vec::new();
    for (v, a) in chart.vars.iter().zip(&chart.axes) {
        let scale = 2.0 * PI / a.length();
        if a.periodic {
            out.push(e(&format!("sin({scale}*({v}) + 0.3)")));
            out.push(e(&format!("cos({scale}*({v}))")));
        } else {
            out.push(e(&format!("cos({v})")));
        }
    }
    out
}

fn validate_all(path: &str, exprs: &[Expr], allowed: &[String]) -> Result<()> {
    for (i, ex) in exprs.iter().enumerate() {
        ex.validate(allowed)
            .map_err(|err| Error::config(format!("{path}[{i}]"), err.to_string()))?;
    }
    Ok(())
}

impl ScenarioDef {
    pub fn name(&self) -> &str {
        match self {
            ScenarioDef::Intrinsic { name, .. } | ScenarioDef::Embedded { name, .. } => name,
        }
    }

    /// Validates and builds the scenario; `path` prefixes error locations.
    pub fn build(&self, path: &str) -> Result<Scenario> {
        match self {
            ScenarioDef::Intrinsic {
                name,
                vars,
                axes,
                metric,
                euler,
                basis,
            } => {
                let chart = Arc::new(
                    Chart::new(vars.clone(), axes.clone())
                        .map_err(|err| Error::config(format!("{path}.axes"), err.to_string()))?,
                );
                let rows = parse_matrix(&format!("{path}.metric"), metric)?;
                for (i, r) in rows.iter().enumerate() {
                    validate_all(&format!("{path}.metric[{i}]"), r, vars)?;
                }
                let metric = Metric::from_matrix(chart.clone(), rows)
                    .map_err(|err| Error::config(format!("{path}.metric"), err.to_string()))?;
                let surface_basis = match basis {
                    Some(b) => {
                        let parsed = parse_all(&format!("{path}.basis"), b)?;
                        validate_all(&format!("{path}.basis"), &parsed, vars)?;
                        parsed
                    }
                    None => default_basis(&chart),
                };
                Ok(Scenario {
                    name: name.clone(),
                    source: GeometrySource::Intrinsic(metric),
                    euler: *euler,
                    surface_basis,
                    ambient_basis: Vec::new(),
                    umbilic: false,
                })
            }
            ScenarioDef::Embedded {
                name,
                surface_vars,
                surface_axes,
                ambient_vars,
                ambient_axes,
                ambient_metric,
                embedding,
                orientation,
                euler,
                basis,
                ambient_basis,
                umbilic,
            } => {
                let surface = Arc::new(
                    Chart::new(surface_vars.clone(), surface_axes.clone()).map_err(|err| {
                        Error::config(format!("{path}.surface_axes"), err.to_string())
                    })?,
                );
                let amb_chart = Arc::new(
                    Chart::new(ambient_vars.clone(), ambient_axes.clone()).map_err(|err| {
                        Error::config(format!("{path}.ambient_axes"), err.to_string())
                    })?,
                );
                let rows = parse_matrix(&format!("{path}.ambient_metric"), ambient_metric)?;
                for (i, r) in rows.iter().enumerate() {
                    validate_all(&format!("{path}.ambient_metric[{i}]"), r, ambient_vars)?;
                }
                let ambient = Metric::from_matrix(amb_chart.clone(), rows).map_err(|err| {
                    Error::config(format!("{path}.ambient_metric"), err.to_string())
                })?;
                let comps = parse_all(&format!("{path}.embedding"), embedding)?;
                validate_all(&format!("{path}.embedding"), &comps, surface_vars)?;
                let emb = Embedding::new(surface.clone(), ambient, comps, *orientation)
                    .map_err(|err| Error::config(format!("{path}.embedding"), err.to_string()))?;
                let surface_basis = match basis {
                    Some(b) => {
                        let parsed = parse_all(&format!("{path}.basis"), b)?;
                        validate_all(&format!("{path}.basis"), &parsed, surface_vars)?;
                        parsed
                    }
                    None => default_basis(&surface),
                };
                let ambient_basis = match ambient_basis {
                    Some(b) => {
                        let parsed = parse_all(&format!("{path}.ambient_basis"), b)?;
                        validate_all(&format!("{path}.ambient_basis"), &parsed, ambient_vars)?;
                        parsed
                    }
                    None => default_basis(&amb_chart),
                };
                Ok(Scenario {
                    name: name.clone(),
                    source: GeometrySource::Embedded(Arc::new(emb)),
                    euler: *euler,
                    surface_basis,
                    ambient_basis,
                    umbilic: *umbilic,
                })
            }
        }
    }
}

impl Scenario {
    /// Surface dimension.
    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn is_embedded(&self) -> bool {
        matches!(self.source, GeometrySource::Embedded(_))
    }

    pub fn embedding(&self) -> Option<&Arc<Embedding>> {
        match &self.source {
            GeometrySource::Embedded(e) => Some(e),
            GeometrySource::Intrinsic(_) => None,
        }
    }

    pub fn surface_metric(&self) -> Metric {
        self.source.surface_metric()
    }

    pub fn chart(&self) -> Arc<Chart> {
        self.surface_metric().chart().clone()
    }

    /// Whether every axis is periodic or an interval meant for polar
    /// quadrature, so integrals over the chart are integrals over a closed
    /// manifold.
    pub fn is_closed(&self) -> bool {
        self.euler.is_some()
    }

    /// Functions from which conformal factors are built: ambient functions
    /// for embedded scenarios, surface functions otherwise.
    pub fn conformal_basis(&self) -> &[Expr] {
        if self.is_embedded() {
            &self.ambient_basis
        } else {
            &self.surface_basis
        }
    }

    /// The same scenario with the (ambient) metric scaled by `e^{2φ}`.
    pub fn rescaled(&self, phi: &Expr) -> Result<Scenario> {
        conformally_perturbed(&self.name, self.clone(), phi.clone())
    }

    /// `φ` as a function on the surface.
    pub fn restrict(&self, phi: &Expr) -> Expr {
        match &self.source {
            GeometrySource::Embedded(emb) => emb.pullback(phi),
            GeometrySource::Intrinsic(_) => phi.clone(),
        }
    }

    /// Random points in the surface chart, keeping a margin from the ends of
    /// non-periodic axes.
    pub fn random_points<R: Rng>(&self, rng: &mut R, count: usize) -> Vec<Vec<f64>> {
        let chart = self.chart();
        (0..count)
            .map(|_| {
                chart
                    .axes
                    .iter()
                    .map(|a| {
                        if a.periodic {
                            rng.gen_range(a.lo..a.hi)
                        } else {
                            let m = 0.1 * a.length();
                            rng.gen_range(a.lo + m..a.hi - m)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// `Σ c_k b_k` with `c_k` uniform in `[−amplitude, amplitude]`.
pub fn random_combination<R: Rng>(rng: &mut R, basis: &[Expr], amplitude: f64) -> Expr {
    let mut acc: Option<Expr> = None;
    for b in basis {
        let c: f64 = rng.gen_range(-amplitude..=amplitude);
        let term = Expr::num(c) * b.clone();
        acc = Some(match acc {
            Some(a) => a + term,
            None => term,
        });
    }
    acc.unwrap_or_else(|| Expr::num(0.0))
}

/// Names of the default catalog used by `--suite all`.
pub fn default_catalog() -> Vec<&'static str> {
    vec![
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
        "SPHERE_IN_FLAT(4,2)",
        "SPHERE_IN_FLAT(3,1)",
        "SLICE(S2xS2)",
        "SLICE(PS3)",
        "GRAPH(2)",
        "GRAPH(3)",
        "GRAPH(4)",
        "GRAPH(4,flat)",
    ]
}
