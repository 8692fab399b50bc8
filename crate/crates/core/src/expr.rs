//! A small arithmetic expression language over named coordinates.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := atom ('^' exponent)?
//! exponent := '-' exponent | power          (must fold to a constant)
//! atom     := number | 'pi' | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Exponents are folded at parse time, so `x^2^3` is `x^8` and `x^-1` is
//! allowed. Integer exponents evaluate by repeated multiplication and accept
//! any base; other exponents need a positive base.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

/// Variable bindings for [`Expr::eval_jet`].
pub trait Bindings {
    fn lookup(&self, name: &str) -> Option<&Jet>;
    /// `(nvars, degree)` used for constants.
    fn shape(&self) -> (usize, usize);
}

/// Parallel slices of names and jets.
pub struct Env<'a> {
    pub names: &'a [String],
    pub values: &'a [Jet],
}

impl Bindings for Env<'_> {
    fn lookup(&self, name: &str) -> Option<&Jet> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.values[i])
    }

    fn shape(&self) -> (usize, usize) {
        self.values
            .first()
            .map(|j| (j.nvars(), j.degree()))
            .unwrap_or((1, 0))
    }
}

impl Bindings for HashMap<String, Jet> {
    fn lookup(&self, name: &str) -> Option<&Jet> {
        self.get(name)
    }

    fn shape(&self) -> (usize, usize) {
        self.values()
            .map(|j| (j.nvars(), j.degree()))
            .min_by_key(|s| s.1)
            .unwrap_or((1, 0))
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        match p.peek() {
            Tok::Eof => Ok(e),
            Tok::RParen => Err(p.error("unbalanced parentheses: unexpected `)`")),
            _ => Err(p.error("unexpected token")),
        }
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) | Expr::Pi => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Succeeds iff every free variable is in `allowed`.
    pub fn validate(&self, allowed: &[String]) -> Result<()> {
        let bad: Vec<String> = self
            .free_vars()
            .into_iter()
            .filter(|v| !allowed.contains(v))
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Undeclared(bad))
        }
    }

    /// Replaces variables by expressions (used for pullbacks `φ ∘ ι`).
    pub fn substitute(&self, map: &HashMap<String, Expr>) -> Expr {
        match self {
            Expr::Num(_) | Expr::Pi => self.clone(),
            Expr::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(map))),
            Expr::Bin(op, a, b) => {
                Expr::Bin(*op, Box::new(a.substitute(map)), Box::new(b.substitute(map)))
            }
            Expr::Pow(a, k) => Expr::Pow(Box::new(a.substitute(map)), *k),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(map))),
        }
    }

    pub fn eval_jet<B: Bindings>(&self, env: &B) -> Result<Jet> {
        let (nvars, degree) = env.shape();
        self.eval_rec(env, nvars, degree)
    }

    fn eval_rec<B: Bindings>(&self, env: &B, nvars: usize, degree: usize) -> Result<Jet> {
        Ok(match self {
            Expr::Num(v) => Jet::constant(*v, nvars, degree),
            Expr::Pi => Jet::constant(std::f64::consts::PI, nvars, degree),
            Expr::Var(name) => env
                .lookup(name)
                .cloned()
                .ok_or_else(|| Error::UnboundVariable(name.clone()))?,
            Expr::Neg(a) => -a.eval_rec(env, nvars, degree)?,
            Expr::Bin(op, a, b) => {
                // Constant operands skip a full jet product.
                if let (BinOp::Mul, Expr::Num(c)) = (op, a.as_ref()) {
                    return Ok(b.eval_rec(env, nvars, degree)?.scale(*c));
                }
                let x = a.eval_rec(env, nvars, degree)?;
                let y = b.eval_rec(env, nvars, degree)?;
                match op {
                    BinOp::Add => x.try_add(&y)?,
                    BinOp::Sub => x.try_sub(&y)?,
                    BinOp::Mul => x.try_mul(&y)?,
                    BinOp::Div => x.try_div(&y)?,
                }
            }
            Expr::Pow(a, k) => a.eval_rec(env, nvars, degree)?.powf(*k)?,
            Expr::Call(f, a) => {
                let x = a.eval_rec(env, nvars, degree)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => x.ln()?,
                    Func::Sqrt => x.sqrt()?,
                }
            }
        })
    }

    /// Plain numeric evaluation.
    pub fn eval_f64(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(name) => lookup(name).ok_or_else(|| Error::UnboundVariable(name.clone()))?,
            Expr::Neg(a) => -a.eval_f64(lookup)?,
            Expr::Bin(op, a, b) => {
                let x = a.eval_f64(lookup)?;
                let y = b.eval_f64(lookup)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y.abs() <= 1e-300 {
                            return Err(Error::Singular(format!("division by {y:e}")));
                        }
                        x / y
                    }
                }
            }
            Expr::Pow(a, k) => {
                let x = a.eval_f64(lookup)?;
                if k.fract() == 0.0 {
                    x.powi(*k as i32)
                } else if x >= 0.0 {
                    x.powf(*k)
                } else {
                    return Err(Error::Domain(format!("non-integer power {k} of {x}")));
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval_f64(lookup)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log if x > 0.0 => x.ln(),
                    Func::Sqrt if x >= 0.0 => x.sqrt(),
                    _ => return Err(Error::Domain(format!("{}({x})", f.name()))),
                }
            }
        })
    }

    fn constant_value(&self) -> Option<f64> {
        if self.free_vars().is_empty() {
            self.eval_f64(&|_| None).ok()
        } else {
            None
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Bin(BinOp::Add, Box::new(self), Box::new(rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Bin(BinOp::Mul, Box::new(self), Box::new(rhs))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => {
                write!(f, "(-{})", -v)
            }
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(a, k) => {
                if matches!(a.as_ref(), Expr::Pow(..)) {
                    write!(f, "({a})^{k}")
                } else {
                    write!(f, "{a}^{k}")
                }
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, start));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let value: f64 = lit.parse().map_err(|_| ParseError {
                offset: start,
                message: format!("malformed number `{lit}`"),
            })?;
            if !value.is_finite() {
                return Err(ParseError {
                    offset: start,
                    message: format!("number `{lit}` out of range"),
                });
            }
            out.push((Tok::Num(value), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        let ch = text[start..].chars().next().unwrap_or('?');
        return Err(ParseError {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        });
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError {
            offset: self.offset(),
            message: message.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let at = self.offset();
        let exponent = self.exponent()?;
        let k = exponent.constant_value().ok_or_else(|| ParseError {
            offset: at,
            message: "exponent must be a numeric constant".into(),
        })?;
        if !k.is_finite() {
            return Err(ParseError {
                offset: at,
                message: "exponent is not finite".into(),
            });
        }
        Ok(Expr::Pow(Box::new(base), k))
    }

    fn exponent(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.exponent()?)));
        }
        self.power()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError {
                        offset: at,
                        message: format!("unknown function `{name}`"),
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else if name == "pi" {
                    Ok(Expr::Pi)
                } else if Func::from_name(&name).is_some() {
                    Err(ParseError {
                        offset: at,
                        message: format!("function `{name}` needs an argument"),
                    })
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::Eof => Err(ParseError {
                offset: at,
                message: "unexpected end of input".into(),
            }),
            Tok::RParen => Err(ParseError {
                offset: at,
                message: "unbalanced parentheses: unexpected `)`".into(),
            }),
            _ => Err(ParseError {
                offset: at,
                message: "expected a number, variable, function or `(`".into(),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error("unbalanced parentheses: expected `)`"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn env1(x: f64, degree: usize) -> (Vec<String>, Vec<Jet>) {
        (
            vec!["x1".to_string()],
            vec![Jet::seed_variable(0, x, 1, degree).unwrap()],
        )
    }

    #[test]
    fn parse_examples() {
        let e = Expr::parse("sin(x1)*exp(2*x2)").unwrap();
        match &e {
            Expr::Bin(BinOp::Mul, a, b) => {
                assert_eq!(**a, Expr::Call(Func::Sin, Box::new(Expr::var("x1"))));
                assert_eq!(
                    **b,
                    Expr::Call(
                        Func::Exp,
                        Box::new(Expr::Bin(
                            BinOp::Mul,
                            Box::new(Expr::Num(2.0)),
                            Box::new(Expr::var("x2"))
                        ))
                    )
                );
            }
            other => panic!("unexpected tree {other:?}"),
        }

        let err = Expr::parse("1 + ").unwrap_err();
        assert_eq!(err.offset, 4);

        let e = Expr::parse("x1^2 + pi").unwrap();
        assert_eq!(
            e,
            Expr::Bin(
                BinOp::Add,
                Box::new(Expr::Pow(Box::new(Expr::var("x1")), 2.0)),
                Box::new(Expr::Pi)
            )
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let v = |s: &str| Expr::parse(s).unwrap().eval_f64(&|_| None).unwrap();
        assert_eq!(v("-2^2"), -4.0);
        assert_eq!(v("2^3^2"), 512.0);
        assert_eq!(v("8 - 3 - 2"), 3.0);
        assert_eq!(v("8 / 4 / 2"), 1.0);
        assert_eq!(v("2 * -3"), -6.0);
        assert_eq!(v("2^-1"), 0.5);
        assert_eq!(v("1.5e1 + .5"), 15.5);
    }

    #[test]
    fn diagnostics() {
        let e = Expr::parse("foo(x1)").unwrap_err();
        assert_eq!(e.offset, 0);
        assert!(e.message.contains("unknown function"));
        let e = Expr::parse("(x1 + 2").unwrap_err();
        assert!(e.message.contains("unbalanced"));
        let e = Expr::parse("x1 + 2)").unwrap_err();
        assert!(e.message.contains("unbalanced"));
        assert_eq!(e.offset, 6);
        let e = Expr::parse("x1^x2").unwrap_err();
        assert!(e.message.contains("exponent"));
        assert!(Expr::parse("1e999").is_err());
        assert!(Expr::parse("x1 $ 2").is_err());
    }

    #[test]
    fn eval_examples() {
        let (names, values) = {
            let (n, _) = env1(3.0, 2);
            (n, vec![Jet::seed_variable(0, 3.0, 1, 2).unwrap()])
        };
        let env = Env { names: &names, values: &values };
        let j = Expr::parse("x1*x1").unwrap().eval_jet(&env).unwrap();
        assert_eq!(j.coeffs(), &[9.0, 6.0, 1.0]);

        let (names, values) = env1(-1.0, 2);
        let env = Env { names: &names, values: &values };
        assert!(matches!(
            Expr::parse("sqrt(x1)").unwrap().eval_jet(&env),
            Err(Error::Domain(_))
        ));

        let (names, values) = env1(0.0, 3);
        let env = Env { names: &names, values: &values };
        let j = Expr::parse("sin(x1)").unwrap().eval_jet(&env).unwrap();
        for (c, want) in j.coeffs().iter().zip([0.0, 1.0, 0.0, -1.0 / 6.0]) {
            assert_relative_eq!(*c, want, epsilon = 1e-15);
        }

        let err = Expr::parse("x2").unwrap().eval_jet(&env).unwrap_err();
        assert!(matches!(err, Error::UnboundVariable(v) if v == "x2"));
    }

    #[test]
    fn integer_powers_accept_negative_bases() {
        let (names, values) = env1(-2.0, 2);
        let env = Env { names: &names, values: &values };
        let j = Expr::parse("x1^3").unwrap().eval_jet(&env).unwrap();
        assert_eq!(j.coeffs(), &[-8.0, 12.0, -6.0]);
        assert!(Expr::parse("x1^0.5").unwrap().eval_jet(&env).is_err());
    }

    #[test]
    fn validate_examples() {
        let allowed = vec!["x1".to_string(), "x2".to_string()];
        assert!(Expr::parse("x1+x2").unwrap().validate(&allowed).is_ok());
        match Expr::parse("x3").unwrap().validate(&allowed) {
            Err(Error::Undeclared(v)) => assert_eq!(v, vec!["x3".to_string()]),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("pi").unwrap().validate(&[]).is_ok());
    }

    #[test]
    fn substitution_composes() {
        let phi = Expr::parse("y1*y2").unwrap();
        let mut map = HashMap::new();
        map.insert("y1".to_string(), Expr::parse("cos(x1)").unwrap());
        map.insert("y2".to_string(), Expr::parse("2").unwrap());
        let pulled = phi.substitute(&map);
        let v = pulled
            .eval_f64(&|n| (n == "x1").then_some(0.0))
            .unwrap();
        assert_eq!(v, 2.0);
    }
}
