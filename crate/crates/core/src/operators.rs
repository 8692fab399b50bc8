//! Intrinsic and extrinsic conformal Laplacians, Q-curvatures and the
//! quantities built from them.
//!
//! Every operator is pointwise: it consumes geometry jets of degree
//! `output degree + order` at a point and returns a jet of the output degree.
//! [`OperatorField`] wraps an operator as a [`ScalarField`] so applications
//! can be nested.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Metric, PointGeometry, ScalarField, Tensor};
use crate::hypersurface::{Embedding, ExtrinsicGeometry};
use crate::jet::Jet;

/// Tunable coefficients of the operator formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpParams {
    /// Coefficient of `|ρ|²` in `Q₄`.
    pub rho_coefficient: f64,
    /// Coefficient of `Δ|L̊|²` in `𝒞`.
    pub c_laplacian_coefficient: f64,
    /// Largest admissible `|L̊_ij|` for umbilic-only operators.
    pub umbilic_tol: f64,
}

impl Default for OpParams {
    fn default() -> Self {
        OpParams {
            rho_coefficient: DEFAULT_RHO_COEFFICIENT,
            c_laplacian_coefficient: DEFAULT_C_LAPLACIAN_COEFFICIENT,
            umbilic_tol: 1e-9,
        }
    }
}

/// `|ρ|²` coefficient selected by the coefficient audit.
pub const DEFAULT_RHO_COEFFICIENT: f64 = 2.0;

/// `Δ|L̊|²` coefficient of `𝒞` as printed.
pub const PRINTED_C_LAPLACIAN_COEFFICIENT: f64 = -0.5;

/// `Δ|L̊|²` coefficient of `𝒞` selected by the invariance audit.
pub const DEFAULT_C_LAPLACIAN_COEFFICIENT: f64 = 0.5;

fn n_of(geo: &PointGeometry) -> f64 {
    geo.dim() as f64
}

/// `P₂f = Δf − (n/2 − 1) J f`.
pub fn p2(geo: &PointGeometry, f: &Jet) -> Result<Jet> {
    let n = n_of(geo);
    let lap = geo.laplacian(f)?;
    let j = geo.j()?;
    Ok(lap - (&j * f).scale(n / 2.0 - 1.0))
}

/// `Q₂ = J`.
pub fn q2(geo: &PointGeometry) -> Result<Jet> {
    geo.j()
}

/// `Q₄ = (n/2) J² − c|ρ|² − ΔJ`.
pub fn q4(geo: &PointGeometry, rho_coefficient: f64) -> Result<Jet> {
    let n = n_of(geo);
    let j = geo.j()?;
    let rho = geo.schouten()?;
    let rho2 = geo.norm2(rho)?;
    let lap_j = geo.laplacian(&j)?;
    Ok((&j * &j).scale(n / 2.0) - rho2.scale(rho_coefficient) - lap_j)
}

/// `P₄f = Δ²f − δ(((n−2)J h − 4ρ) df) + (n/2 − 2) Q₄ f`.
pub fn p4(geo: &PointGeometry, f: &Jet, rho_coefficient: f64) -> Result<Jet> {
    let n = n_of(geo);
    let lap2 = geo.laplacian(&geo.laplacian(f)?)?;
    let t = paneitz_tensor(geo)?;
    let mut out = lap2 - geo.div_apply(&t, f)?;
    if n != 4.0 {
        let q = q4(geo, rho_coefficient)?;
        out = out + (&q * f).scale(n / 2.0 - 2.0);
    }
    Ok(out)
}

/// `(n−2) J h − 4ρ`.
fn paneitz_tensor(geo: &PointGeometry) -> Result<Tensor> {
    let n = n_of(geo);
    let rho = geo.schouten()?;
    let j = geo.j()?;
    let jh = geo.metric().truncate(j.degree()).mul_jet(&j.scale(n - 2.0));
    jh.try_sub(&rho.scale(4.0))
}

fn require_n(xg: &ExtrinsicGeometry, what: &str, ok: bool, want: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} requires {want}, hypersurface has n = {}",
            xg.n()
        )))
    }
}

/// `|L̊|²` on the surface.
fn l0_norm2(xg: &ExtrinsicGeometry) -> Result<Jet> {
    xg.surface().norm2(xg.trace_free_sff()?)
}

/// `𝐏₂f = P₂f + (n−2)/(4(n−1)) |L̊|² f`.
pub fn ext_p2(xg: &ExtrinsicGeometry, f: &Jet) -> Result<Jet> {
    let geo = xg.surface();
    let n = n_of(geo);
    let base = p2(geo, f)?;
    let l2 = l0_norm2(xg)?;
    Ok(base + (&l2 * f).scale((n - 2.0) / (4.0 * (n - 1.0))))
}

/// `𝐐₂ = J + |L̊|²/(2(n−1))`.
pub fn ext_q2(xg: &ExtrinsicGeometry) -> Result<Jet> {
    let geo = xg.surface();
    let n = n_of(geo);
    let l2 = l0_norm2(xg)?;
    Ok(geo.j()? + l2.scale(1.0 / (2.0 * (n - 1.0))))
}

/// `𝐐₃ = 4/(n−2) (δδL̊ − (n−3)(L̊,ρ) + (n−1)(L̊,𝔉))`.
pub fn ext_q3(xg: &ExtrinsicGeometry) -> Result<Jet> {
    require_n(xg, "Q3", xg.n() >= 3, "n ≥ 3")?;
    let geo = xg.surface();
    let n = n_of(geo);
    let l0 = xg.trace_free_sff()?;
    let dd = geo.double_divergence(l0)?;
    let l_rho = geo.inner(l0, geo.schouten()?)?;
    let l_f = geo.inner(l0, &xg.fialkow()?)?;
    Ok((dd - l_rho.scale(n - 3.0) + l_f.scale(n - 1.0)).scale(4.0 / (n - 2.0)))
}

/// `𝐏₃f = 8δ(L̊ df) + (n−3)/2 𝐐₃ f`.
pub fn ext_p3(xg: &ExtrinsicGeometry, f: &Jet) -> Result<Jet> {
    require_n(xg, "P3", xg.n() >= 3, "n ≥ 3")?;
    let geo = xg.surface();
    let n = n_of(geo);
    let l0 = xg.trace_free_sff()?;
    let mut out = geo.div_apply(l0, f)?.scale(8.0);
    if n != 3.0 {
        let q = ext_q3(xg)?;
        out = out + (&q * f).scale((n - 3.0) / 2.0);
    }
    Ok(out)
}

fn check_umbilic(xg: &ExtrinsicGeometry, tol: f64) -> Result<()> {
    let max = xg.trace_free_sff()?.max_abs_value();
    if max > tol {
        return Err(Error::NonUmbilic {
            max,
            point: xg.surface().point().to_vec(),
            tol,
        });
    }
    Ok(())
}

/// Zeroth-order 𝒲 correction shared by the umbilic `𝐏₄` and `𝐐₄`:
/// `2(n−1)/((n−2)(n−3)) ((n−1)/(n−2)|𝒲|² − (n−4)(ρ,𝒲) + δδ𝒲)`.
fn umbilic_weyl_term(xg: &ExtrinsicGeometry) -> Result<Jet> {
    let geo = xg.surface();
    let n = n_of(geo);
    let w = xg.weyl_slice()?;
    let w2 = geo.norm2(w)?;
    let rho_w = geo.inner(geo.schouten()?, w)?;
    let dd = geo.double_divergence(w)?;
    let inner = w2.scale((n - 1.0) / (n - 2.0)) - rho_w.scale(n - 4.0) + dd;
    Ok(inner.scale(2.0 * (n - 1.0) / ((n - 2.0) * (n - 3.0))))
}

/// Umbilic `𝐏₄f = P₄f + 4(n−1)/(n−2) δ(𝒲 df) + (n/2 − 2) K f`, `n ≥ 4`.
pub fn ext_p4_umbilic(xg: &ExtrinsicGeometry, f: &Jet, params: &OpParams) -> Result<Jet> {
    require_n(xg, "umbilic P4", xg.n() >= 4, "n ≥ 4")?;
    check_umbilic(xg, params.umbilic_tol)?;
    let geo = xg.surface();
    let n = n_of(geo);
    let w = xg.weyl_slice()?;
    let mut out = p4(geo, f, params.rho_coefficient)?
        + geo.div_apply(w, f)?.scale(4.0 * (n - 1.0) / (n - 2.0));
    if n != 4.0 {
        let k = umbilic_weyl_term(xg)?;
        out = out + (&k * f).scale(n / 2.0 - 2.0);
    }
    Ok(out)
}

/// Umbilic `𝐐₄ = Q₄ + K`, `n ≥ 4`.
pub fn ext_q4_umbilic(xg: &ExtrinsicGeometry, params: &OpParams) -> Result<Jet> {
    require_n(xg, "umbilic Q4", xg.n() >= 4, "n ≥ 4")?;
    check_umbilic(xg, params.umbilic_tol)?;
    Ok(q4(xg.surface(), params.rho_coefficient)? + umbilic_weyl_term(xg)?)
}

/// `n = 4` critical `𝐏₄ = Δ² − δ(2Jh − 4ρ)d + δ(2L̊² − (4/3)|L̊|²h + 6𝒲)d`.
pub fn ext_p4_critical(xg: &ExtrinsicGeometry, f: &Jet) -> Result<Jet> {
    require_n(xg, "critical P4", xg.n() == 4, "n = 4")?;
    let geo = xg.surface();
    let l0 = xg.trace_free_sff()?;
    let l0sq = geo.compose(l0, l0)?;
    let l2 = l0_norm2(xg)?;
    let w = xg.weyl_slice()?;
    let d = w.degree();
    let t = l0sq
        .truncate(d)
        .scale(2.0)
        .try_sub(&geo.metric().truncate(d).mul_jet(&l2.truncate(d).scale(4.0 / 3.0)))?
        .try_add(&w.scale(6.0))?;
    let lap2 = geo.laplacian(&geo.laplacian(f)?)?;
    Ok(lap2 - geo.div_apply(&paneitz_tensor(geo)?, f)? + geo.div_apply(&t, f)?)
}

/// `I₁ = 2J² − 2|ρ|² + (9/2)|𝒲|²`.
pub fn integrand_i1(xg: &ExtrinsicGeometry) -> Result<Jet> {
    require_n(xg, "I1", xg.n() == 4, "n = 4")?;
    let geo = xg.surface();
    let j = geo.j()?;
    let rho2 = geo.norm2(geo.schouten()?)?;
    let w2 = geo.norm2(xg.weyl_slice()?)?;
    Ok((&j * &j).scale(2.0) - rho2.scale(2.0) + w2.scale(4.5))
}

/// `I₂ = 2(L̊,∇̄₀ρ̄) − 4L̊^{ij}∇̄₀W̄_{0ij0} + 2(L̊,Hess H) + 2H(L̊,ρ) − 9H(L̊,𝒲)`.
pub fn integrand_i2(xg: &ExtrinsicGeometry) -> Result<Jet> {
    require_n(xg, "I2", xg.n() == 4, "n = 4")?;
    let geo = xg.surface();
    let l0 = xg.trace_free_sff()?;
    let h = xg.mean_curvature()?;
    let a = geo.inner(l0, &xg.normal_derivative_schouten()?)?;
    let b = geo.inner(l0, xg.normal_derivative_weyl_slice()?)?;
    let hess = geo.inner(l0, &geo.hessian(h)?)?;
    let l_rho = geo.inner(l0, geo.schouten()?)?;
    let l_w = geo.inner(l0, xg.weyl_slice()?)?;
    Ok(a.scale(2.0) - b.scale(4.0) + hess.scale(2.0) + (h * &l_rho).scale(2.0)
        - (h * &l_w).scale(9.0))
}

/// The part of `I₃` without the `(L̊²,𝒲)` term:
/// `8(L̊²,ρ) − 2ρ̄₀₀|L̊|² − 3J|L̊|² − 3H²|L̊|² − H tr(L̊³)`.
fn i3_core(xg: &ExtrinsicGeometry) -> Result<Jet> {
    let geo = xg.surface();
    let l0 = xg.trace_free_sff()?;
    let l0sq = geo.compose(l0, l0)?;
    let l2 = l0_norm2(xg)?;
    let h = xg.mean_curvature()?;
    let a = geo.inner(&l0sq, geo.schouten()?)?;
    let rho00 = xg.schouten_normal()?;
    let j = geo.j()?;
    let tr3 = geo.inner(&l0sq, l0)?;
    let h2 = h * h;
    Ok(a.scale(8.0) - (&rho00 * &l2).scale(2.0) - (&j * &l2).scale(3.0)
        - (&h2 * &l2).scale(3.0)
        - h * &tr3)
}

/// `I₃ = 8(L̊²,ρ) − 2ρ̄₀₀|L̊|² − 3J|L̊|² − 3H²|L̊|² − H tr(L̊³) + 21(L̊²,𝒲)`.
pub fn integrand_i3(xg: &ExtrinsicGeometry) -> Result<Jet> {
    require_n(xg, "I3", xg.n() == 4, "n = 4")?;
    let geo = xg.surface();
    let l0 = xg.trace_free_sff()?;
    let l0sq = geo.compose(l0, l0)?;
    let lw = geo.inner(&l0sq, xg.weyl_slice()?)?;
    Ok(i3_core(xg)? + lw.scale(21.0))
}

/// `(I₁, I₂, I₃)`.
pub fn q4_total_integrand(xg: &ExtrinsicGeometry) -> Result<(Jet, Jet, Jet)> {
    Ok((integrand_i1(xg)?, integrand_i2(xg)?, integrand_i3(xg)?))
}

/// `δδ(L̊²)`.
pub fn div_div_l0_squared(xg: &ExtrinsicGeometry) -> Result<Jet> {
    let geo = xg.surface();
    let l0 = xg.trace_free_sff()?;
    geo.double_divergence(&geo.compose(l0, l0)?)
}

/// `Δ|L̊|²`.
pub fn laplacian_l0_norm2(xg: &ExtrinsicGeometry) -> Result<Jet> {
    xg.surface().laplacian(&l0_norm2(xg)?)
}

/// `δδ𝒲`.
pub fn div_div_weyl_slice(xg: &ExtrinsicGeometry) -> Result<Jet> {
    xg.surface().double_divergence(xg.weyl_slice()?)
}

/// `𝒞 = I₂ + (I₃ without the 𝒲 term) + 2δδ(L̊²) + c·Δ|L̊|²`, `n = 4`, with
/// `c = params.c_laplacian_coefficient`.
pub fn c_invariant(xg: &ExtrinsicGeometry, params: &OpParams) -> Result<Jet> {
    require_n(xg, "C", xg.n() == 4, "n = 4")?;
    Ok(integrand_i2(xg)? + i3_core(xg)? + div_div_l0_squared(xg)?.scale(2.0)
        + laplacian_l0_norm2(xg)?.scale(params.c_laplacian_coefficient))
}

/// Both sides of the umbilic normal-derivative identity:
/// `(δ(∇̄₀(ρ̄)₀) − Δ(ρ̄₀₀ + H²), −δδ𝒲/(n−2))`.
pub fn lemma_simple_sides(xg: &ExtrinsicGeometry, params: &OpParams) -> Result<(Jet, Jet)> {
    require_n(xg, "the umbilic normal-derivative identity", xg.n() >= 3, "n ≥ 3")?;
    check_umbilic(xg, params.umbilic_tol)?;
    let geo = xg.surface();
    let n = n_of(geo);
    let a = geo.div1(&xg.normal_derivative_schouten_mixed()?)?;
    let h = xg.mean_curvature()?;
    let b = geo.laplacian(&(xg.schouten_normal()? + h * h))?;
    let w = div_div_weyl_slice(xg)?;
    Ok((a - b, w.scale(-1.0 / (n - 2.0))))
}

/// `δ(∇̄₀(ρ̄)₀) − Δ(ρ̄₀₀ + H²) + δδ𝒲/(n−2)` on umbilic hypersurfaces.
pub fn lemma_simple_residual(xg: &ExtrinsicGeometry, params: &OpParams) -> Result<Jet> {
    let (lhs, rhs) = lemma_simple_sides(xg, params)?;
    Ok(lhs - rhs)
}

/// `(|L̊|⁴, tr L̊⁴, (L̊²,𝒲), |𝒲|², |W|²)`.
pub fn quartic_invariants(xg: &ExtrinsicGeometry) -> Result<[Jet; 5]> {
    let geo = xg.surface();
    let l0 = xg.trace_free_sff()?;
    let l0sq = geo.compose(l0, l0)?;
    let l2 = l0_norm2(xg)?;
    let w = xg.weyl_slice()?;
    Ok([
        &l2 * &l2,
        geo.norm2(&l0sq)?,
        geo.inner(&l0sq, w)?,
        geo.norm2(w)?,
        geo.norm2(geo.weyl()?)?,
    ])
}

/// Named operators and scalar quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    P2,
    Q2,
    P4,
    Q4,
    ExtP2,
    ExtQ2,
    ExtP3,
    ExtQ3,
    ExtP4Umbilic,
    ExtQ4Umbilic,
    ExtP4Critical,
    CInvariant,
    I1,
    I2,
    I3,
    LemmaSimpleResidual,
    L0Norm4,
    TraceL0Fourth,
    L0SquaredWeyl,
    WeylSliceNorm2,
    WeylNorm2,
    DivDivWeylSlice,
    DivDivL0Squared,
    LaplacianL0Norm2,
}

impl Op {
    pub const ALL: [Op; 24] = [
        Op::P2,
        Op::Q2,
        Op::P4,
        Op::Q4,
        Op::ExtP2,
        Op::ExtQ2,
        Op::ExtP3,
        Op::ExtQ3,
        Op::ExtP4Umbilic,
        Op::ExtQ4Umbilic,
        Op::ExtP4Critical,
        Op::CInvariant,
        Op::I1,
        Op::I2,
        Op::I3,
        Op::LemmaSimpleResidual,
        Op::L0Norm4,
        Op::TraceL0Fourth,
        Op::L0SquaredWeyl,
        Op::WeylSliceNorm2,
        Op::WeylNorm2,
        Op::DivDivWeylSlice,
        Op::DivDivL0Squared,
        Op::LaplacianL0Norm2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Op::P2 => "p2",
            Op::Q2 => "q2",
            Op::P4 => "p4",
            Op::Q4 => "q4",
            Op::ExtP2 => "ext_p2",
            Op::ExtQ2 => "ext_q2",
            Op::ExtP3 => "ext_p3",
            Op::ExtQ3 => "ext_q3",
            Op::ExtP4Umbilic => "ext_p4_umbilic",
            Op::ExtQ4Umbilic => "ext_q4_umbilic",
            Op::ExtP4Critical => "ext_p4_critical",
            Op::CInvariant => "c_invariant",
            Op::I1 => "i1",
            Op::I2 => "i2",
            Op::I3 => "i3",
            Op::LemmaSimpleResidual => "lemma_simple_residual",
            Op::L0Norm4 => "l0_norm4",
            Op::TraceL0Fourth => "trace_l0_fourth",
            Op::L0SquaredWeyl => "l0_squared_weyl",
            Op::WeylSliceNorm2 => "weyl_slice_norm2",
            Op::WeylNorm2 => "weyl_norm2",
            Op::DivDivWeylSlice => "div_div_weyl_slice",
            Op::DivDivL0Squared => "div_div_l0_squared",
            Op::LaplacianL0Norm2 => "laplacian_l0_norm2",
        }
    }

    /// Number of derivatives consumed beyond the output degree.
    pub fn order(self) -> usize {
        match self {
            Op::P2 | Op::Q2 | Op::ExtP2 | Op::ExtQ2 => 2,
            Op::P4 | Op::Q4 | Op::ExtP4Umbilic | Op::ExtQ4Umbilic | Op::ExtP4Critical => 4,
            Op::ExtP3 | Op::ExtQ3 | Op::CInvariant | Op::I2 => 3,
            Op::I1 | Op::I3 => 2,
            Op::LemmaSimpleResidual | Op::DivDivWeylSlice => 4,
            Op::DivDivL0Squared | Op::LaplacianL0Norm2 => 3,
            Op::L0Norm4 | Op::TraceL0Fourth | Op::L0SquaredWeyl | Op::WeylSliceNorm2 => 2,
            Op::WeylNorm2 => 2,
        }
    }

    /// Whether the operator acts on an input function.
    pub fn takes_input(self) -> bool {
        matches!(
            self,
            Op::P2 | Op::P4 | Op::ExtP2 | Op::ExtP3 | Op::ExtP4Umbilic | Op::ExtP4Critical
        )
    }

    /// Whether the operator needs an embedding.
    pub fn is_extrinsic(self) -> bool {
        !matches!(self, Op::P2 | Op::Q2 | Op::P4 | Op::Q4)
    }

    pub fn umbilic_only(self) -> bool {
        matches!(
            self,
            Op::ExtP4Umbilic | Op::ExtQ4Umbilic | Op::LemmaSimpleResidual
        )
    }

    /// Covariance bidegree `(a, b)` with `e^{aφ} P(ĝ) f = P(g)(e^{bφ} f)`.
    pub fn bidegree(self, n: usize) -> Option<(f64, f64)> {
        let n = n as f64;
        match self {
            Op::P2 => Some((n / 2.0 + 1.0, n / 2.0 - 1.0)),
            Op::P4 => Some((n / 2.0 + 2.0, n / 2.0 - 2.0)),
            Op::ExtP2 => Some(((n + 2.0) / 2.0, (n - 2.0) / 2.0)),
            Op::ExtP3 => Some(((n + 3.0) / 2.0, (n - 3.0) / 2.0)),
            Op::ExtP4Umbilic | Op::ExtP4Critical => Some(((n + 4.0) / 2.0, (n - 4.0) / 2.0)),
            _ => None,
        }
    }

    pub fn spec(self, n: usize) -> Option<OperatorSpec> {
        let (a, b) = self.bidegree(n)?;
        Some(OperatorSpec {
            name: self.name().to_string(),
            order: match self {
                Op::P2 | Op::ExtP2 => 2,
                Op::ExtP3 => 3,
                _ => 4,
            },
            bidegree: (a, b),
            extrinsic: self.is_extrinsic(),
            umbilic_only: self.umbilic_only(),
        })
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Op {
    type Err = Error;

    fn from_str(s: &str) -> Result<Op> {
        Op::ALL
            .iter()
            .copied()
            .find(|op| op.name() == s)
            .ok_or_else(|| {
                Error::Other(format!(
                    "unknown operator `{s}` (known: {})",
                    Op::ALL.map(|o| o.name()).join(", ")
                ))
            })
    }
}

/// Conformal behaviour of a covariant operator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorSpec {
    pub name: String,
    pub order: usize,
    pub bidegree: (f64, f64),
    pub extrinsic: bool,
    pub umbilic_only: bool,
}

/// Critical transformation law `e^{wφ} Q̂ = Q + sign · P(φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QSpec {
    pub q: Op,
    pub p: Op,
    pub order: usize,
    pub weight: f64,
    pub sign: f64,
}

impl QSpec {
    pub const Q2: QSpec = QSpec {
        q: Op::Q2,
        p: Op::P2,
        order: 2,
        weight: 2.0,
        sign: -1.0,
    };
    pub const Q4: QSpec = QSpec {
        q: Op::Q4,
        p: Op::P4,
        order: 4,
        weight: 4.0,
        sign: 1.0,
    };
    pub const EXT_Q2: QSpec = QSpec {
        q: Op::ExtQ2,
        p: Op::ExtP2,
        order: 2,
        weight: 2.0,
        sign: -1.0,
    };
    pub const EXT_Q3: QSpec = QSpec {
        q: Op::ExtQ3,
        p: Op::ExtP3,
        order: 3,
        weight: 3.0,
        sign: 1.0,
    };
    pub const EXT_Q4_UMBILIC: QSpec = QSpec {
        q: Op::ExtQ4Umbilic,
        p: Op::ExtP4Umbilic,
        order: 4,
        weight: 4.0,
        sign: 1.0,
    };
}

/// Where an operator takes its geometry from.
#[derive(Clone)]
pub enum GeometrySource {
    Intrinsic(Metric),
    Embedded(Arc<Embedding>),
}

impl GeometrySource {
    /// Surface dimension.
    pub fn dim(&self) -> usize {
        match self {
            GeometrySource::Intrinsic(m) => m.dim(),
            GeometrySource::Embedded(e) => e.n(),
        }
    }

    /// The metric operators act on: `h` itself or the induced metric.
    pub fn surface_metric(&self) -> Metric {
        match self {
            GeometrySource::Intrinsic(m) => m.clone(),
            GeometrySource::Embedded(e) => e.induced_metric(),
        }
    }
}

/// Evaluates `op` at `x`, returning a jet of degree `degree`.
pub fn evaluate(
    op: Op,
    source: &GeometrySource,
    input: Option<&dyn ScalarField>,
    x: &[f64],
    degree: usize,
    params: &OpParams,
) -> Result<Jet> {
    let inputs: Vec<&dyn ScalarField> = input.into_iter().collect();
    Ok(evaluate_many(op, source, &inputs, x, degree, params)?.remove(0))
}

/// Applies `op` to each input at `x`, computing the geometry once. Operators
/// without input return a single jet.
pub fn evaluate_many(
    op: Op,
    source: &GeometrySource,
    inputs: &[&dyn ScalarField],
    x: &[f64],
    degree: usize,
    params: &OpParams,
) -> Result<Vec<Jet>> {
    let total = degree + op.order();
    let jets: Vec<Option<Jet>> = if op.takes_input() {
        if inputs.is_empty() {
            return Err(Error::Other(format!("operator `{op}` needs an input function")));
        }
        inputs
            .iter()
            .map(|f| f.eval(x, total).map(Some))
            .collect::<Result<_>>()?
    } else {
        vec![None]
    };
    let outs = if op.is_extrinsic() {
        let GeometrySource::Embedded(emb) = source else {
            return Err(Error::Other(format!(
                "operator `{op}` needs an embedded scenario"
            )));
        };
        let xg = emb.geometry(x, total)?;
        jets.iter()
            .map(|f| eval_extrinsic(op, &xg, f.as_ref(), params))
            .collect::<Result<Vec<_>>>()?
    } else {
        let geo = source.surface_metric().at(x, total)?;
        jets.iter()
            .map(|f| eval_intrinsic(op, &geo, f.as_ref(), params))
            .collect::<Result<Vec<_>>>()?
    };
    outs.into_iter()
        .map(|out| {
            if out.degree() < degree {
                return Err(Error::degree(op.name(), degree, out.degree()));
            }
            Ok(out.truncate(degree))
        })
        .collect()
}

fn eval_intrinsic(op: Op, geo: &PointGeometry, f: Option<&Jet>, params: &OpParams) -> Result<Jet> {
    Ok(match op {
        Op::P2 => p2(geo, f.expect("input"))?,
        Op::Q2 => q2(geo)?,
        Op::P4 => p4(geo, f.expect("input"), params.rho_coefficient)?,
        Op::Q4 => q4(geo, params.rho_coefficient)?,
        _ => unreachable!("extrinsic operators are dispatched separately"),
    })
}

fn eval_extrinsic(
    op: Op,
    xg: &ExtrinsicGeometry,
    f: Option<&Jet>,
    params: &OpParams,
) -> Result<Jet> {
    Ok(match op {
        Op::ExtP2 => ext_p2(xg, f.expect("input"))?,
        Op::ExtQ2 => ext_q2(xg)?,
        Op::ExtP3 => ext_p3(xg, f.expect("input"))?,
        Op::ExtQ3 => ext_q3(xg)?,
        Op::ExtP4Umbilic => ext_p4_umbilic(xg, f.expect("input"), params)?,
        Op::ExtQ4Umbilic => ext_q4_umbilic(xg, params)?,
        Op::ExtP4Critical => ext_p4_critical(xg, f.expect("input"))?,
        Op::CInvariant => c_invariant(xg, params)?,
        Op::I1 => integrand_i1(xg)?,
        Op::I2 => integrand_i2(xg)?,
        Op::I3 => integrand_i3(xg)?,
        Op::LemmaSimpleResidual => lemma_simple_residual(xg, params)?,
        Op::L0Norm4 | Op::TraceL0Fourth | Op::L0SquaredWeyl | Op::WeylSliceNorm2 | Op::WeylNorm2 => {
            let [a, b, c, d, e] = quartic_invariants(xg)?;
            match op {
                Op::L0Norm4 => a,
                Op::TraceL0Fourth => b,
                Op::L0SquaredWeyl => c,
                Op::WeylSliceNorm2 => d,
                _ => e,
            }
        }
        Op::DivDivWeylSlice => div_div_weyl_slice(xg)?,
        Op::DivDivL0Squared => div_div_l0_squared(xg)?,
        Op::LaplacianL0Norm2 => laplacian_l0_norm2(xg)?,
        Op::P2 | Op::Q2 | Op::P4 | Op::Q4 => unreachable!("intrinsic operator"),
    })
}

/// An operator applied to an optional input field, itself a scalar field.
#[derive(Clone)]
pub struct OperatorField {
    pub op: Op,
    pub source: GeometrySource,
    pub input: Option<Arc<dyn ScalarField>>,
    pub params: OpParams,
    pub max_degree: usize,
}

impl OperatorField {
    pub fn new(op: Op, source: GeometrySource, max_degree: usize) -> OperatorField {
        OperatorField {
            op,
            source,
            input: None,
            params: OpParams::default(),
            max_degree,
        }
    }

    pub fn with_input(mut self, input: Arc<dyn ScalarField>) -> OperatorField {
        self.input = Some(input);
        self
    }

    pub fn with_params(mut self, params: OpParams) -> OperatorField {
        self.params = params;
        self
    }
}

impl ScalarField for OperatorField {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn eval(&self, point: &[f64], degree: usize) -> Result<Jet> {
        let needed = degree + self.op.order();
        if needed > self.max_degree {
            return Err(Error::degree(
                format!("operator `{}` at output degree {degree}", self.op),
                needed,
                self.max_degree,
            ));
        }
        evaluate(
            self.op,
            &self.source,
            self.input.as_deref(),
            point,
            degree,
            &self.params,
        )
    }
}
