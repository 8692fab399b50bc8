//! Truncated multivariate Taylor series ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients of a scalar quantity around a
//! base point, for all multi-indices `|α| ≤ degree`, in graded-lexicographic
//! order. The ordering within each total degree only depends on the number of
//! variables, so a jet of degree `d` is a prefix of the same jet at any higher
//! degree and truncation is a slice operation.
//!
//! Coefficients are Taylor coefficients, not derivatives: the value of
//! `∂^α f` at the base point is `α! · c_α` (see [`Jet::extract`]).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_VARS: usize = 6;
pub const MAX_DEGREE: usize = 8;

type Exps = [u8; MAX_VARS];

struct Layout {
    nvars: usize,
    exps: Vec<Exps>,
    degs: Vec<u8>,
    /// `prefix[d]` = number of monomials of total degree `< d`.
    prefix: [usize; MAX_DEGREE + 2],
    add_off: Vec<usize>,
    /// For monomial `i`, `add[add_off[i] + j]` is the index of `i + j` for
    /// every `j` with `|j| ≤ MAX_DEGREE - |i|`.
    add: Vec<u32>,
    /// Index of `α + e_v`; `u32::MAX` when `|α| = MAX_DEGREE`.
    shift: Vec<Exps32>,
    fact: Vec<f64>,
    /// Index in this layout of `(β, 0)` for each `β` of the layout with one
    /// variable fewer.
    restrict: Vec<u32>,
}

type Exps32 = [u32; MAX_VARS];

impl Layout {
    fn count(&self, degree: usize) -> usize {
        self.prefix[degree + 1]
    }

    fn build(nvars: usize) -> Layout {
        let mut exps: Vec<Exps> = Vec::new();
        let mut degs = Vec::new();
        let mut prefix = [0usize; MAX_DEGREE + 2];
        for d in 0..=MAX_DEGREE {
            prefix[d] = exps.len();
            let mut cur = [0u8; MAX_VARS];
            compositions(nvars, d, 0, &mut cur, &mut exps);
            degs.resize(exps.len(), d as u8);
        }
        prefix[MAX_DEGREE + 1] = exps.len();

        let index = |e: &Exps| -> u32 {
            let d: usize = e.iter().map(|&v| v as usize).sum();
            let lo = prefix[d];
            let hi = prefix[d + 1];
            // Monomials of one degree are in descending lexicographic order.
            let pos = exps[lo..hi]
                .binary_search_by(|probe| e.cmp(probe))
                .expect("monomial present in layout");
            (lo + pos) as u32
        };

        let mut add_off = Vec::with_capacity(exps.len());
        let mut add = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            add_off.push(add.len());
            let room = MAX_DEGREE - degs[i] as usize;
            for ej in &exps[..prefix[room + 1]] {
                let mut s = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    s[v] = ei[v] + ej[v];
                }
                add.push(index(&s));
            }
        }

        let shift = exps
            .iter()
            .map(|e| {
                let mut out = [u32::MAX; MAX_VARS];
                let d: usize = e.iter().map(|&v| v as usize).sum();
                if d < MAX_DEGREE {
                    for (v, slot) in out.iter_mut().enumerate().take(nvars) {
                        let mut s = *e;
                        s[v] += 1;
                        *slot = index(&s);
                    }
                }
                out
            })
            .collect();

        let fact = exps
            .iter()
            .map(|e| e.iter().map(|&k| factorial(k as usize)).product())
            .collect();

        let mut restrict = Vec::new();
        if nvars >= 2 {
            let mut lower: Vec<Exps> = Vec::new();
            for d in 0..=MAX_DEGREE {
                let mut cur = [0u8; MAX_VARS];
                compositions(nvars - 1, d, 0, &mut cur, &mut lower);
            }
            restrict = lower.iter().map(&index).collect();
        }

        Layout {
            nvars,
            exps,
            degs,
            prefix,
            add_off,
            add,
            shift,
            fact,
            restrict,
        }
    }
}

fn compositions(nvars: usize, remaining: usize, var: usize, cur: &mut Exps, out: &mut Vec<Exps>) {
    if var + 1 == nvars {
        cur[var] = remaining as u8;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        cur[var] = k as u8;
        compositions(nvars, remaining - k, var + 1, cur, out);
    }
    cur[var] = 0;
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

fn layout(nvars: usize) -> &'static Layout {
    static LAYOUTS: [OnceLock<Layout>; MAX_VARS + 1] = [const { OnceLock::new() }; MAX_VARS + 1];
    LAYOUTS[nvars].get_or_init(|| Layout::build(nvars))
}

/// Number of multi-indices `|α| ≤ degree` in `nvars` variables.
pub fn coefficient_count(nvars: usize, degree: usize) -> usize {
    layout(nvars).count(degree)
}

fn check_shape(nvars: usize, degree: usize) -> Result<()> {
    if nvars == 0 || nvars > MAX_VARS {
        return Err(Error::InvalidJet(format!(
            "nvars = {nvars} outside 1..={MAX_VARS}"
        )));
    }
    if degree > MAX_DEGREE {
        return Err(Error::InvalidJet(format!(
            "degree = {degree} exceeds maximum {MAX_DEGREE}"
        )));
    }
    Ok(())
}

/// The binary operations of [`arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, PartialEq)]
pub struct Jet {
    nvars: u8,
    degree: u8,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(n={}, d={}, {:?})", self.nvars, self.degree, self.coeffs)
    }
}

impl Jet {
    /// Constant jet. Panics on an invalid shape.
    pub fn constant(value: f64, nvars: usize, degree: usize) -> Jet {
        check_shape(nvars, degree).expect("valid jet shape");
        let mut coeffs = vec![0.0; coefficient_count(nvars, degree)];
        coeffs[0] = value;
        Jet {
            nvars: nvars as u8,
            degree: degree as u8,
            coeffs,
        }
    }

    pub fn zero(nvars: usize, degree: usize) -> Jet {
        Jet::constant(0.0, nvars, degree)
    }

    /// Jet of the coordinate function `x_i` at base value `x0`.
    pub fn seed_variable(i: usize, x0: f64, nvars: usize, degree: usize) -> Result<Jet> {
        check_shape(nvars, degree)?;
        if degree == 0 {
            return Err(Error::InvalidJet(
                "a coordinate jet needs degree >= 1 to carry a derivative".into(),
            ));
        }
        if i >= nvars {
            return Err(Error::InvalidJet(format!(
                "variable index {i} out of range for {nvars} variables"
            )));
        }
        let mut jet = Jet::constant(x0, nvars, degree);
        jet.coeffs[1 + i] = 1.0;
        Ok(jet)
    }

    /// Seeds every coordinate at `point` (one variable per coordinate).
    pub fn seed_point(point: &[f64], degree: usize) -> Result<Vec<Jet>> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if degree == 0 {
                    check_shape(n, 0)?;
                    Ok(Jet::constant(x, n, 0))
                } else {
                    Jet::seed_variable(i, x, n, degree)
                }
            })
            .collect()
    }

    pub fn from_coeffs(nvars: usize, degree: usize, coeffs: Vec<f64>) -> Result<Jet> {
        check_shape(nvars, degree)?;
        let expected = coefficient_count(nvars, degree);
        if coeffs.len() != expected {
            return Err(Error::InvalidJet(format!(
                "expected {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        Ok(Jet {
            nvars: nvars as u8,
            degree: degree as u8,
            coeffs,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    pub fn degree(&self) -> usize {
        self.degree as usize
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Constant term (the value at the base point).
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of the monomial `x^α`.
    pub fn coeff(&self, alpha: &[usize]) -> Option<f64> {
        let idx = self.index_of(alpha)?;
        self.coeffs.get(idx).copied()
    }

    fn index_of(&self, alpha: &[usize]) -> Option<usize> {
        if alpha.len() != self.nvars() {
            return None;
        }
        let lay = layout(self.nvars());
        let d: usize = alpha.iter().sum();
        if d > MAX_DEGREE {
            return None;
        }
        let mut e = [0u8; MAX_VARS];
        for (slot, &a) in e.iter_mut().zip(alpha) {
            *slot = a as u8;
        }
        let lo = lay.prefix[d];
        let hi = lay.prefix[d + 1];
        lay.exps[lo..hi]
            .binary_search_by(|probe| e.cmp(probe))
            .ok()
            .map(|p| lo + p)
    }

    /// `∂^α` of the represented function at the base point.
    pub fn extract(&self, alpha: &[usize]) -> Result<f64> {
        if alpha.len() != self.nvars() {
            return Err(Error::InvalidJet(format!(
                "multi-index has {} entries, jet has {} variables",
                alpha.len(),
                self.nvars
            )));
        }
        let order: usize = alpha.iter().sum();
        if order > self.degree() {
            return Err(Error::degree(
                format!("derivative of order {order}"),
                order,
                self.degree(),
            ));
        }
        let idx = self.index_of(alpha).expect("in range");
        Ok(layout(self.nvars()).fact[idx] * self.coeffs[idx])
    }

    /// All multi-indices of this jet, in storage order.
    pub fn multi_indices(&self) -> Vec<Vec<usize>> {
        let lay = layout(self.nvars());
        lay.exps[..self.coeffs.len()]
            .iter()
            .map(|e| e[..lay.nvars].iter().map(|&v| v as usize).collect())
            .collect()
    }

    pub fn truncate(&self, degree: usize) -> Jet {
        if degree >= self.degree() {
            return self.clone();
        }
        let len = coefficient_count(self.nvars(), degree);
        Jet {
            nvars: self.nvars,
            degree: degree as u8,
            coeffs: self.coeffs[..len].to_vec(),
        }
    }

    fn truncate_in_place(&mut self, degree: usize) {
        if degree < self.degree() {
            let len = coefficient_count(self.nvars(), degree);
            self.coeffs.truncate(len);
            self.degree = degree as u8;
        }
    }

    fn same_vars(&self, other: &Jet) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::InvalidJet(format!(
                "operands have {} and {} variables",
                self.nvars, other.nvars
            )));
        }
        Ok(())
    }

    /// `∂a/∂x_i`, one degree lower.
    pub fn partial(&self, i: usize) -> Result<Jet> {
        if i >= self.nvars() {
            return Err(Error::InvalidJet(format!(
                "variable index {i} out of range for {} variables",
                self.nvars
            )));
        }
        if self.degree == 0 {
            return Err(Error::degree("partial derivative", 1, 0));
        }
        let lay = layout(self.nvars());
        let d = self.degree() - 1;
        let len = lay.count(d);
        let coeffs = (0..len)
            .map(|k| (lay.exps[k][i] as f64 + 1.0) * self.coeffs[lay.shift[k][i] as usize])
            .collect();
        Ok(Jet {
            nvars: self.nvars,
            degree: d as u8,
            coeffs,
        })
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.same_vars(other)?;
        let d = self.degree.min(other.degree);
        let len = coefficient_count(self.nvars(), d as usize);
        let coeffs = self.coeffs[..len]
            .iter()
            .zip(&other.coeffs[..len])
            .map(|(a, b)| a + b)
            .collect();
        Ok(Jet {
            nvars: self.nvars,
            degree: d,
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        self.same_vars(other)?;
        let d = self.degree.min(other.degree);
        let len = coefficient_count(self.nvars(), d as usize);
        let coeffs = self.coeffs[..len]
            .iter()
            .zip(&other.coeffs[..len])
            .map(|(a, b)| a - b)
            .collect();
        Ok(Jet {
            nvars: self.nvars,
            degree: d,
            coeffs,
        })
    }

    /// Truncated Cauchy product.
    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.same_vars(other)?;
        let d = self.degree.min(other.degree) as usize;
        let mut out = Jet::zero(self.nvars(), d);
        mul_into(&mut out.coeffs, &self.coeffs, &other.coeffs, self.nvars(), d);
        Ok(out)
    }

    /// `self += a * b`; the degree drops to the minimum of the three.
    pub fn fma(&mut self, a: &Jet, b: &Jet) {
        assert!(
            self.nvars == a.nvars && a.nvars == b.nvars,
            "jet variable counts differ"
        );
        let d = self.degree.min(a.degree).min(b.degree) as usize;
        self.truncate_in_place(d);
        let nv = self.nvars();
        mul_into(&mut self.coeffs, &a.coeffs, &b.coeffs, nv, d);
    }

    /// `self += c * a`.
    pub fn axpy(&mut self, c: f64, a: &Jet) {
        assert_eq!(self.nvars, a.nvars, "jet variable counts differ");
        let d = self.degree.min(a.degree) as usize;
        self.truncate_in_place(d);
        for (s, x) in self.coeffs.iter_mut().zip(&a.coeffs) {
            *s += c * x;
        }
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        self.same_vars(other)?;
        let inv = other.recip()?;
        self.try_mul(&inv)
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            nvars: self.nvars,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add_scalar(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Composes the univariate series `Σ c_k t^k` with `self - self.value()`.
    fn compose(&self, series: &[f64]) -> Jet {
        let d = self.degree();
        debug_assert!(series.len() > d);
        let mut t = self.clone();
        t.coeffs[0] = 0.0;
        let mut acc = Jet::constant(series[d], self.nvars(), d);
        for k in (0..d).rev() {
            let mut next = Jet::constant(series[k], self.nvars(), d);
            next.fma(&acc, &t);
            acc = next;
        }
        acc
    }

    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0.abs() <= 1e-300 {
            return Err(Error::Singular(format!(
                "division by a jet with constant term {a0:e}"
            )));
        }
        let inv = 1.0 / a0;
        let mut series = Vec::with_capacity(self.degree() + 1);
        let mut c = inv;
        for _ in 0..=self.degree() {
            series.push(c);
            c *= -inv;
        }
        Ok(self.compose(&series))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let series: Vec<f64> = (0..=self.degree()).map(|k| e / factorial(k)).collect();
        self.compose(&series)
    }

    pub fn ln(&self) -> Result<Jet> {
        let a0 = self.value();
        if !(a0 > 0.0) {
            return Err(Error::Domain(format!("log of non-positive value {a0}")));
        }
        let mut series = vec![a0.ln()];
        for k in 1..=self.degree() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series.push(sign / (k as f64 * a0.powi(k as i32)));
        }
        Ok(self.compose(&series))
    }

    fn trig(&self, phase: usize) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let series: Vec<f64> = (0..=self.degree())
            .map(|k| cycle[(k + phase) % 4] / factorial(k))
            .collect();
        self.compose(&series)
    }

    pub fn sin(&self) -> Jet {
        self.trig(0)
    }

    pub fn cos(&self) -> Jet {
        self.trig(1)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a0 = self.value();
        if a0 < 0.0 || (a0 == 0.0 && self.degree > 0) {
            return Err(Error::Domain(format!("sqrt of value {a0}")));
        }
        self.powf(0.5)
    }

    /// Real power; requires a positive base unless `p` is a non-negative integer.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
            return self.powi(p as i32);
        }
        let a0 = self.value();
        if !(a0 > 0.0) && !(a0 == 0.0 && self.degree == 0) {
            return Err(Error::Domain(format!(
                "non-integer power {p} of non-positive value {a0}"
            )));
        }
        let mut series = Vec::with_capacity(self.degree() + 1);
        let mut binom = 1.0;
        for k in 0..=self.degree() {
            series.push(binom * a0.powf(p - k as f64));
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        Ok(self.compose(&series))
    }

    /// Integer power by repeated squaring; negative exponents go through [`Jet::recip`].
    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut result = Jet::constant(1.0, self.nvars(), self.degree());
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    /// Sets the last variable to zero, giving a jet in one variable fewer.
    pub fn restrict_last(&self) -> Jet {
        assert!(self.nvars >= 2, "cannot restrict a single-variable jet");
        let lay = layout(self.nvars());
        let len = coefficient_count(self.nvars() - 1, self.degree());
        let coeffs = lay.restrict[..len]
            .iter()
            .map(|&k| self.coeffs[k as usize])
            .collect();
        Jet {
            nvars: self.nvars - 1,
            degree: self.degree,
            coeffs,
        }
    }

    /// Embeds into one more variable that the jet does not depend on.
    pub fn extend_var(&self) -> Jet {
        assert!(self.nvars() < MAX_VARS, "too many variables");
        let lay = layout(self.nvars() + 1);
        let mut out = Jet::zero(self.nvars() + 1, self.degree());
        for (k, &c) in self.coeffs.iter().enumerate() {
            out.coeffs[lay.restrict[k] as usize] = c;
        }
        out
    }

    /// Maximum absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

fn mul_into(out: &mut [f64], a: &[f64], b: &[f64], nvars: usize, d: usize) {
    let lay = layout(nvars);
    let len = lay.count(d);
    for i in 0..len {
        let ai = a[i];
        if ai == 0.0 {
            continue;
        }
        let room = d - lay.degs[i] as usize;
        let row = &lay.add[lay.add_off[i]..lay.add_off[i] + lay.count(room)];
        for (bj, &k) in b.iter().zip(row) {
            out[k as usize] += ai * bj;
        }
    }
}

/// Binary jet arithmetic with explicit error reporting.
pub fn arith(op: ArithOp, a: &Jet, b: &Jet) -> Result<Jet> {
    match op {
        ArithOp::Add => a.try_add(b),
        ArithOp::Sub => a.try_sub(b),
        ArithOp::Mul => a.try_mul(b),
        ArithOp::Div => a.try_div(b),
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $inner:ident) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                self.$inner(rhs).expect("jet operands share variables")
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$inner(&rhs).expect("jet operands share variables")
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$inner(rhs).expect("jet operands share variables")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_scalar(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn layout_sizes() {
        assert_eq!(coefficient_count(2, 3), 10);
        assert_eq!(coefficient_count(6, 8), 3003);
        assert_eq!(coefficient_count(1, 0), 1);
    }

    #[test]
    fn seed_examples() {
        let j = Jet::seed_variable(0, 2.0, 2, 3).unwrap();
        assert_eq!(j.coeff(&[0, 0]), Some(2.0));
        assert_eq!(j.coeff(&[1, 0]), Some(1.0));
        assert_eq!(j.coeff(&[0, 1]), Some(0.0));
        assert_eq!(j.coeffs().iter().filter(|c| **c != 0.0).count(), 2);

        let j = Jet::seed_variable(1, 0.0, 2, 2).unwrap();
        assert_eq!(j.coeff(&[0, 1]), Some(1.0));
        assert_eq!(j.max_abs(), 1.0);

        assert!(Jet::seed_variable(2, 1.0, 2, 3).is_err());
        assert!(Jet::seed_variable(0, 1.0, 2, 0).is_err());
    }

    #[test]
    fn arithmetic_examples() {
        let x = Jet::seed_variable(0, 1.0, 1, 2).unwrap();
        let sq = &x * &x;
        assert_eq!(sq.coeffs(), &[1.0, 2.0, 1.0]);

        let one = Jet::constant(1.0, 1, 2);
        let t = Jet::seed_variable(0, 0.0, 1, 2).unwrap();
        let q = one.try_div(&(&one + &t)).unwrap();
        assert_eq!(q.coeffs(), &[1.0, -1.0, 1.0]);

        let zero_const = Jet::seed_variable(0, 0.0, 1, 2).unwrap();
        assert!(matches!(one.try_div(&zero_const), Err(Error::Singular(_))));
        assert!(arith(ArithOp::Div, &one, &zero_const).is_err());
        assert!(arith(ArithOp::Add, &one, &Jet::constant(1.0, 2, 2)).is_err());
    }

    #[test]
    fn mixed_degree_takes_minimum() {
        let a = Jet::seed_variable(0, 1.0, 2, 4).unwrap();
        let b = Jet::seed_variable(1, 1.0, 2, 2).unwrap();
        assert_eq!((&a * &b).degree(), 2);
        assert_eq!((&a + &b).degree(), 2);
    }

    #[test]
    fn elementary_examples() {
        let x = Jet::seed_variable(0, 0.0, 1, 3).unwrap();
        let e = x.exp();
        for (c, want) in e.coeffs().iter().zip([1.0, 1.0, 0.5, 1.0 / 6.0]) {
            assert_relative_eq!(*c, want, epsilon = 1e-15);
        }

        let y = Jet::from_coeffs(1, 1, vec![4.0, 1.0]).unwrap();
        let r = y.sqrt().unwrap();
        assert_relative_eq!(r.coeffs()[0], 2.0);
        assert_relative_eq!(r.coeffs()[1], 0.25);

        let neg = Jet::constant(-1.0, 1, 2);
        assert!(matches!(neg.ln(), Err(Error::Domain(_))));

        let s = x.sin();
        for (c, want) in s.coeffs().iter().zip([0.0, 1.0, 0.0, -1.0 / 6.0]) {
            assert_relative_eq!(*c, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn partial_examples() {
        let x = Jet::seed_variable(0, 1.0, 1, 2).unwrap();
        let sq = &x * &x;
        let d = sq.partial(0).unwrap();
        assert_eq!(d.degree(), 1);
        assert_eq!(d.coeffs(), &[2.0, 2.0]);

        let c = Jet::constant(3.0, 1, 1);
        let dc = c.partial(0).unwrap();
        assert_eq!(dc.degree(), 0);
        assert_eq!(dc.coeffs(), &[0.0]);

        assert!(matches!(
            Jet::constant(3.0, 1, 0).partial(0),
            Err(Error::DegreeExhausted { .. })
        ));
    }

    #[test]
    fn extract_examples() {
        let x = Jet::seed_variable(0, 1.0, 1, 2).unwrap();
        let sq = &x * &x;
        assert_eq!(sq.extract(&[2]).unwrap(), 2.0);
        assert_eq!(sq.extract(&[0]).unwrap(), 1.0);
        assert!(matches!(
            sq.extract(&[3]),
            Err(Error::DegreeExhausted { .. })
        ));
    }

    #[test]
    fn restrict_and_extend_are_inverse_on_independent_jets() {
        let x = Jet::seed_variable(0, 0.3, 2, 4).unwrap();
        let f = x.sin().exp();
        let lifted = f.extend_var();
        assert_eq!(lifted.nvars(), 3);
        assert_eq!(lifted.restrict_last(), f);
        let s = Jet::seed_variable(2, 0.0, 3, 4).unwrap();
        assert_eq!((&lifted * &s).restrict_last().max_abs(), 0.0);
    }

    #[test]
    fn powi_matches_repeated_product_and_negative_powers() {
        let x = Jet::seed_variable(0, 1.5, 2, 5).unwrap();
        let y = Jet::seed_variable(1, -0.5, 2, 5).unwrap();
        let p = &x + &y;
        let cube = &(&p * &p) * &p;
        assert_eq!(p.powi(3).unwrap(), cube);
        let back = &p.powi(-2).unwrap() * &p.powi(2).unwrap();
        assert_relative_eq!(back.coeffs()[0], 1.0, epsilon = 1e-14);
        assert!(back.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
    }
}
