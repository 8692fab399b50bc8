//! Tensor-product quadrature on closed charts.
//!
//! Periodic axes use the trapezoid rule, interval axes Gauss–Legendre. Polar
//! axes of sphere charts are intervals; their `sin θ` factors come in through
//! `√det g`, and Gauss–Legendre nodes never touch the poles.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Chart, Metric, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    TrapezoidPeriodic,
    GaussLegendre,
}

#[derive(Clone, Debug)]
pub struct AxisRule {
    pub rule: Rule,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisRule {
    fn new(lo: f64, hi: f64, periodic: bool, count: usize) -> Result<AxisRule> {
        let count = NonZeroUsize::new(count)
            .ok_or_else(|| Error::Other("quadrature needs at least one node per axis".into()))?;
        let len = hi - lo;
        if periodic {
            let h = len / count.get() as f64;
            Ok(AxisRule {
                rule: Rule::TrapezoidPeriodic,
                nodes: (0..count.get()).map(|k| lo + k as f64 * h).collect(),
                weights: vec![h; count.get()],
            })
        } else {
            let gl = GaussLegendre::new(count);
            let (nodes, weights) = gl
                .iter()
                .map(|(x, w)| (lo + 0.5 * len * (x + 1.0), 0.5 * len * w))
                .unzip();
            Ok(AxisRule {
                rule: Rule::GaussLegendre,
                nodes,
                weights,
            })
        }
    }
}

/// Product rule over all axes of a chart.
#[derive(Clone, Debug)]
pub struct Quadrature {
    vars: Vec<String>,
    axes: Vec<AxisRule>,
}

impl Quadrature {
    /// Uses each axis's node hint, or `nodes` on every axis when given.
    pub fn for_chart(chart: &Chart, nodes: Option<usize>) -> Result<Quadrature> {
        let counts: Vec<usize> = chart
            .axes
            .iter()
            .map(|a| nodes.unwrap_or(a.nodes))
            .collect();
        Quadrature::with_counts(chart, &counts)
    }

    pub fn with_counts(chart: &Chart, counts: &[usize]) -> Result<Quadrature> {
        if counts.len() != chart.dim() {
            return Err(Error::Dimension(format!(
                "{} node counts for a {}-dimensional chart",
                counts.len(),
                chart.dim()
            )));
        }
        let axes = chart
            .axes
            .iter()
            .zip(counts)
            .map(|(a, &c)| AxisRule::new(a.lo, a.hi, a.periodic, c))
            .collect::<Result<_>>()?;
        Ok(Quadrature {
            vars: chart.vars.clone(),
            axes,
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[AxisRule] {
        &self.axes
    }

    pub fn counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.nodes.len()).collect()
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of the weights, the coordinate measure of the chart.
    pub fn measure(&self) -> f64 {
        self.axes.iter().map(|a| a.weights.iter().sum::<f64>()).product()
    }

    /// Node and weight number `k`; the first axis varies slowest.
    pub fn node(&self, mut k: usize) -> (Vec<f64>, f64) {
        let mut x = vec![0.0; self.dim()];
        let mut w = 1.0;
        for (slot, axis) in x.iter_mut().zip(&self.axes).rev() {
            let m = axis.nodes.len();
            *slot = axis.nodes[k % m];
            w *= axis.weights[k % m];
            k /= m;
        }
        (x, w)
    }

    fn check_chart(&self, chart: &Chart) -> Result<()> {
        if chart.vars != self.vars {
            return Err(Error::Dimension(format!(
                "quadrature built for chart ({}) used on chart ({})",
                self.vars.join(", "),
                chart.vars.join(", ")
            )));
        }
        Ok(())
    }

    /// `Σ_k w_k F(x_k)` for each of the `width` components of `F`, which must
    /// already include the volume density. Nodes may be evaluated in
    /// parallel; the reduction runs sequentially in node order.
    pub fn sum_many<F>(&self, width: usize, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    {
        let values: Vec<(f64, Vec<f64>)> = (0..self.len())
            .into_par_iter()
            .map(|k| {
                let (x, w) = self.node(k);
                let v = f(&x)?;
                if v.len() != width {
                    return Err(Error::Other(format!(
                        "integrand returned {} values, expected {width}",
                        v.len()
                    )));
                }
                Ok((w, v))
            })
            .collect::<Result<_>>()?;
        let mut sums = vec![Neumaier::default(); width];
        for (w, v) in &values {
            for (s, x) in sums.iter_mut().zip(v) {
                s.add(w * x);
            }
        }
        Ok(sums.iter().map(Neumaier::total).collect())
    }
}

/// `∫ field dvol_g`.
pub fn integrate(field: &dyn ScalarField, g: &Metric, q: &Quadrature) -> Result<f64> {
    q.check_chart(g.chart())?;
    if field.dim() != g.dim() {
        return Err(Error::Dimension(format!(
            "{}-dimensional field integrated over a {}-dimensional chart",
            field.dim(),
            g.dim()
        )));
    }
    let v = q.sum_many(1, |x| Ok(vec![field.value(x)? * g.sqrt_det(x)?]))?;
    Ok(v[0])
}

/// `vol(g)`.
pub fn volume(g: &Metric, q: &Quadrature) -> Result<f64> {
    q.check_chart(g.chart())?;
    let v = q.sum_many(1, |x| Ok(vec![g.sqrt_det(x)?]))?;
    Ok(v[0])
}

/// Compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::geometry::{Axis, ExprField};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn torus(n: usize, nodes: usize) -> Arc<Chart> {
        Arc::new(
            Chart::new(
                (1..=n).map(|i| format!("x{i}")).collect(),
                vec![Axis::periodic(0.0, 2.0 * PI, nodes); n],
            )
            .unwrap(),
        )
    }

    #[test]
    fn flat_torus_volume() {
        let chart = torus(4, 6);
        let q = Quadrature::for_chart(&chart, None).unwrap();
        assert_eq!(q.len(), 6usize.pow(4));
        let v = volume(&Metric::flat(chart), &q).unwrap();
        assert_relative_eq!(v, (2.0 * PI).powi(4), max_relative = 1e-14);
    }

    #[test]
    fn weights_positive_and_sum_to_measure() {
        let chart = Chart::new(
            vec!["a".into(), "b".into()],
            vec![Axis::interval(0.0, PI, 9), Axis::periodic(-1.0, 2.0, 5)],
        )
        .unwrap();
        let q = Quadrature::for_chart(&chart, None).unwrap();
        assert_eq!(q.axes()[0].rule, Rule::GaussLegendre);
        assert_eq!(q.axes()[1].rule, Rule::TrapezoidPeriodic);
        for a in q.axes() {
            assert!(a.weights.iter().all(|w| *w > 0.0));
        }
        assert_relative_eq!(q.measure(), 3.0 * PI, max_relative = 1e-14);
        let total: f64 = (0..q.len()).map(|k| q.node(k).1).sum();
        assert_relative_eq!(total, 3.0 * PI, max_relative = 1e-13);
    }

    #[test]
    fn node_order_is_axis_major() {
        let chart = torus(2, 3);
        let q = Quadrature::for_chart(&chart, None).unwrap();
        let h = 2.0 * PI / 3.0;
        assert_eq!(q.node(1).0, vec![0.0, h]);
        assert_eq!(q.node(3).0, vec![h, 0.0]);
    }

    #[test]
    fn trapezoid_integrates_trig_polynomials_exactly() {
        let chart = torus(2, 8);
        let q = Quadrature::for_chart(&chart, None).unwrap();
        let f = ExprField::new(&chart, Expr::parse("cos(x1)^2 + sin(3*x2)").unwrap()).unwrap();
        let v = integrate(&f, &Metric::flat(chart), &q).unwrap();
        assert_relative_eq!(v, 2.0 * PI * PI, max_relative = 1e-14);
    }

    #[test]
    fn mismatched_chart_rejected() {
        let q = Quadrature::for_chart(&torus(2, 4), None).unwrap();
        let g = Metric::flat(torus(3, 4));
        assert!(volume(&g, &q).is_err());
        assert!(Quadrature::with_counts(&torus(2, 4), &[3]).is_err());
        assert!(Quadrature::for_chart(&torus(2, 4), Some(0)).is_err());
    }

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let mut s = Neumaier::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.total(), 2.0);
    }
}
