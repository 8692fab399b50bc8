//! Property tests of the jet engine and the expression language.

use extrinsic_q::expr::{BinOp, Env, Func};
use extrinsic_q::jet::coefficient_count;
use extrinsic_q::{Expr, Jet};
use proptest::prelude::*;

fn vars() -> Vec<String> {
    vec!["x1".into(), "x2".into()]
}

fn jet_strategy(nvars: usize, degree: usize) -> impl Strategy<Value = Jet> {
    prop::collection::vec(-1.0f64..1.0, coefficient_count(nvars, degree))
        .prop_map(move |c| Jet::from_coeffs(nvars, degree, c).unwrap())
}

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..40).prop_map(|k| Expr::Num(k as f64 / 8.0)),
        Just(Expr::Pi),
        Just(Expr::var("x1")),
        Just(Expr::var("x2")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)];
        let func = prop_oneof![
            Just(Func::Sin),
            Just(Func::Cos),
            Just(Func::Exp),
            Just(Func::Log),
            Just(Func::Sqrt)
        ];
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Bin(o, Box::new(a), Box::new(b))),
            (inner.clone(), prop_oneof![Just(2.0), Just(3.0), Just(0.5)])
                .prop_map(|(e, p)| Expr::Pow(Box::new(e), p)),
            (func, inner).prop_map(|(f, e)| Expr::call(f, e)),
        ]
    })
}

fn same(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn product_rule_holds_for_every_coefficient(
        a in jet_strategy(3, 4),
        b in jet_strategy(3, 4),
        i in 0usize..3,
    ) {
        let lhs = (&a * &b).partial(i).unwrap();
        let rhs = &a.partial(i).unwrap() * &b + &a * &b.partial(i).unwrap();
        prop_assert_eq!(lhs.degree(), rhs.degree());
        for (l, r) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!((l - r).abs() < 1e-12, "{} vs {}", l, r);
        }
    }

    #[test]
    fn polynomial_partials_are_exact(
        terms in prop::collection::vec((-4i64..=4, 0u32..=3, 0u32..=3), 1..5),
        point in (-2i64..=2, -2i64..=2),
        alpha in (0usize..=3, 0usize..=3),
    ) {
        let text = terms
            .iter()
            .map(|(c, p, q)| format!("({c})*x1^{p}*x2^{q}"))
            .collect::<Vec<_>>()
            .join(" + ");
        let expr = Expr::parse(&text).unwrap();
        let x = [point.0 as f64, point.1 as f64];
        let seeds = Jet::seed_point(&x, 6).unwrap();
        let names = vars();
        let jet = expr.eval_jet(&Env { names: &names, values: &seeds }).unwrap();
        let falling = |e: u32, a: usize| -> i64 { (0..a as i64).map(|k| e as i64 - k).product() };
        let mut exact = 0i64;
        for &(c, p, q) in &terms {
            if alpha.0 as u32 > p || alpha.1 as u32 > q {
                continue;
            }
            exact += c
                * falling(p, alpha.0)
                * falling(q, alpha.1)
                * point.0.pow(p - alpha.0 as u32)
                * point.1.pow(q - alpha.1 as u32);
        }
        let got = jet.extract(&[alpha.0, alpha.1]).unwrap();
        prop_assert!((got - exact as f64).abs() < 1e-9, "{} vs {}", got, exact);
    }

    #[test]
    fn central_differences_converge_at_second_order(
        a in 0.3f64..1.0,
        b in -1.0f64..-0.3,
        x1 in -1.0f64..1.0,
        x2 in -1.0f64..1.0,
    ) {
        let expr = Expr::parse(&format!("exp({a}*x1 + {b}*x2)")).unwrap();
        let seeds = Jet::seed_point(&[x1, x2], 1).unwrap();
        let names = vars();
        let d1 = expr.eval_jet(&Env { names: &names, values: &seeds }).unwrap().extract(&[1, 0]).unwrap();
        let f = |t: f64| expr.eval_f64(&|v| match v {
            "x1" => Some(t),
            "x2" => Some(x2),
            _ => None,
        }).unwrap();
        let err = |h: f64| ((f(x1 + h) - f(x1 - h)) / (2.0 * h) - d1).abs();
        let order = (err(2e-2) / err(2e-3)).log10();
        prop_assert!((order - 2.0).abs() < 0.05, "observed order {}", order);
    }

    #[test]
    fn display_round_trips(e in expr_strategy()) {
        let text = e.to_string();
        let back = Expr::parse(&text).unwrap();
        prop_assert_eq!(back, e, "{}", text);
    }

    #[test]
    fn degree_zero_jets_match_scalar_evaluation(
        e in expr_strategy(),
        x1 in 0.1f64..2.0,
        x2 in 0.1f64..2.0,
    ) {
        let names = vars();
        let seeds = Jet::seed_point(&[x1, x2], 0).unwrap();
        let scalar = e.eval_f64(&|v| match v {
            "x1" => Some(x1),
            "x2" => Some(x2),
            _ => None,
        });
        let jet = e.eval_jet(&Env { names: &names, values: &seeds });
        match (scalar, jet) {
            (Ok(s), Ok(j)) => prop_assert!(same(s, j.value()), "{}: {} vs {}", e, s, j.value()),
            (Err(_), Err(_)) => {}
            (s, j) => prop_assert!(false, "{}: {:?} vs {:?}", e, s, j.map(|j| j.value())),
        }
    }
}
