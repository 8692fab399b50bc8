//! Riemannian curvature of a [`PointGeometry`].
//!
//! `R_{ijkl} = ⟨R(∂_i,∂_j)∂_l, ∂_k⟩`, so sectional curvatures are `R_{ijij}`
//! and the unit sphere has `R_{ijkl} = g_{ik}g_{jl} − g_{il}g_{jk}`.
//! `Ric_{jl} = g^{ik}R_{ijkl}`, `J = Scal/(2(m−1))`,
//! `ρ = (Ric − J g)/(m−2)` and `W = R − ρ⊙g`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{PointGeometry, Tensor};
use crate::jet::Jet;

/// Kulkarni–Nomizu product of two symmetric 2-tensors:
/// `(A⊙B)_{ijkl} = A_ik B_jl + A_jl B_ik − A_il B_jk − A_jk B_il`.
pub fn kulkarni_nomizu(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 || a.dim() != b.dim() {
        return Err(Error::Dimension("Kulkarni–Nomizu product needs two 2-tensors".into()));
    }
    Ok(Tensor::from_fn(a.dim(), 4, |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        let mut acc = a.at2(i, k) * b.at2(j, l);
        acc.fma(a.at2(j, l), b.at2(i, k));
        let mut neg = a.at2(i, l) * b.at2(j, k);
        neg.fma(a.at2(j, k), b.at2(i, l));
        acc - neg
    }))
}

impl PointGeometry {
    /// Riemann tensor, all indices down. Needs degree ≥ 2.
    pub fn riemann(&self) -> Result<&Tensor> {
        self.riemann.get_or_try_init(|| {
            if self.degree() < 2 {
                return Err(Error::degree("Riemann tensor", 2, self.degree()));
            }
            let m = self.dim();
            let nv = self.nvars();
            let gamma = self.christoffel()?;
            let d = self.degree() - 2;
            let gam: Vec<Jet> = gamma.comps().iter().map(|j| j.truncate(d)).collect();
            let gi = |p: usize, a: usize, b: usize| &gam[(p * m + a) * m + b];
            // dgam[c][p][a][b] = ∂_c Γ^p_ab
            let dgam: Vec<Vec<Jet>> = (0..m)
                .map(|c| gamma.comps().iter().map(|j| j.partial(c)).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            let dg = |c: usize, p: usize, a: usize, b: usize| &dgam[c][(p * m + a) * m + b];
            let g = self.metric();

            // Computed for i < j; the antisymmetric half is filled by negation.
            let mut upper: Vec<Option<Vec<Jet>>> = vec![None; m * m];
            for i in 0..m {
                for j in (i + 1)..m {
                    // Rm^p_{lij}
                    let mut rm = Vec::with_capacity(m * m);
                    for p in 0..m {
                        for l in 0..m {
                            let mut pos = dg(i, p, j, l).truncate(d);
                            let mut neg = dg(j, p, i, l).truncate(d);
                            for q in 0..m {
                                pos.fma(gi(q, j, l), gi(p, i, q));
                                neg.fma(gi(q, i, l), gi(p, j, q));
                            }
                            rm.push(pos - neg);
                        }
                    }
                    let mut lowered = Vec::with_capacity(m * m);
                    for k in 0..m {
                        for l in 0..m {
                            let mut acc = Jet::zero(nv, d);
                            for p in 0..m {
                                acc.fma(g.at2(k, p), &rm[p * m + l]);
                            }
                            lowered.push(acc);
                        }
                    }
                    upper[i * m + j] = Some(lowered);
                }
            }
            Ok(Tensor::from_fn(m, 4, |x| {
                let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
                if i == j {
                    Jet::zero(nv, d)
                } else if i < j {
                    upper[i * m + j].as_ref().expect("filled")[k * m + l].clone()
                } else {
                    -&upper[j * m + i].as_ref().expect("filled")[k * m + l]
                }
            }))
        })
    }

    /// `Ric_{jl} = g^{ik} R_{ijkl}`.
    pub fn ricci(&self) -> Result<&Tensor> {
        self.ricci.get_or_try_init(|| {
            let r = self.riemann()?;
            let m = self.dim();
            let d = r.degree();
            let ginv = self.inverse();
            Ok(Tensor::from_fn(m, 2, |x| {
                let mut acc = Jet::zero(self.nvars(), d);
                for i in 0..m {
                    for k in 0..m {
                        acc.fma(ginv.at2(i, k), r.get(&[i, x[0], k, x[1]]));
                    }
                }
                acc
            }))
        })
    }

    pub fn scalar_curvature(&self) -> Result<&Jet> {
        self.scal.get_or_try_init(|| {
            let ric = self.ricci()?;
            self.trace(ric)
        })
    }

    /// `J = Scal / (2(m−1))`.
    pub fn j(&self) -> Result<Jet> {
        let m = self.dim();
        if m < 2 {
            return Err(Error::Dimension("J needs dimension ≥ 2".into()));
        }
        Ok(self.scalar_curvature()?.scale(1.0 / (2.0 * (m as f64 - 1.0))))
    }

    /// Schouten tensor `ρ = (Ric − J g)/(m−2)`, dimension ≥ 3.
    pub fn schouten(&self) -> Result<&Tensor> {
        self.schouten.get_or_try_init(|| {
            let m = self.dim();
            if m < 3 {
                return Err(Error::Dimension(format!(
                    "Schouten tensor needs dimension ≥ 3, got {m}"
                )));
            }
            let ric = self.ricci()?;
            let j = self.j()?;
            let jg = self.metric().mul_jet(&j);
            Ok(ric.try_sub(&jg)?.scale(1.0 / (m as f64 - 2.0)))
        })
    }

    /// Weyl tensor `W = R − ρ⊙g`, dimension ≥ 3.
    pub fn weyl(&self) -> Result<&Tensor> {
        self.weyl.get_or_try_init(|| {
            let rho = self.schouten()?;
            let r = self.riemann()?;
            let g = self.metric().truncate(rho.degree());
            r.try_sub(&kulkarni_nomizu(rho, &g)?)
        })
    }

    /// Curvature values at the point, for reports.
    pub fn curvature_pack(&self) -> Result<CurvaturePack> {
        let m = self.dim();
        Ok(CurvaturePack {
            point: self.point().to_vec(),
            dim: m,
            metric: self.metric().to_json(),
            riemann: self.riemann()?.to_json(),
            ricci: self.ricci()?.to_json(),
            scalar: self.scalar_curvature()?.value(),
            j: self.j()?.value(),
            schouten: if m >= 3 {
                Some(self.schouten()?.to_json())
            } else {
                None
            },
            weyl: if m >= 3 {
                Some(self.weyl()?.to_json())
            } else {
                None
            },
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvaturePack {
    pub point: Vec<f64>,
    pub dim: usize,
    pub metric: serde_json::Value,
    pub riemann: serde_json::Value,
    pub ricci: serde_json::Value,
    pub scalar: f64,
    pub j: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schouten: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weyl: Option<serde_json::Value>,
}
