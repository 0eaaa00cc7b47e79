use super::*;
use approx::assert_relative_eq;
use proptest::prelude::*;

fn x() -> Expr {
    Expr::var("x")
}

fn u() -> Expr {
    Expr::var("u")
}

#[test]
fn parse_sum_of_power_and_product() {
    let e = parse("x^2 + 3*u").unwrap();
    let expected = Expr::sum(vec![
        Expr::pow(x(), Expr::int(2)),
        Expr::product(vec![Expr::int(3), u()]),
    ]);
    assert_eq!(e, expected);
}

#[test]
fn parse_function_application() {
    let e = parse("exp(x)*u").unwrap();
    let expected = Expr::product(vec![Expr::apply(Func::Exp, x()), u()]);
    assert_eq!(e, expected);
}

#[test]
fn parse_error_position() {
    let err = parse("x^^2").unwrap_err();
    match err {
        ExprError::Parse { line, col, .. } => {
            assert_eq!(line, 1);
            assert_eq!(col, 2);
        }
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn parse_unknown_function() {
    let err = parse("foo(x)").unwrap_err();
    assert!(matches!(err, ExprError::Parse { col: 0, .. }), "{err:?}");
}

#[test]
fn unary_minus_binds_looser_than_power() {
    // -x^2 == -(x^2)
    assert_eq!(parse("-x^2").unwrap(), Expr::neg(Expr::pow(x(), Expr::int(2))));
    // x^-2 == x^(-2)
    assert_eq!(parse("x^-2").unwrap(), Expr::pow(x(), Expr::int(-2)));
    // right associativity: x^2^3 == x^(2^3) == x^8 after folding
    assert_eq!(parse("x^2^3").unwrap(), Expr::pow(x(), Expr::int(8)));
}

#[test]
fn integer_division_folds_to_rational() {
    assert_eq!(parse("3/4").unwrap(), Expr::rat(3, 4));
    assert_eq!(parse("1/2*x").unwrap(), Expr::product(vec![Expr::rat(1, 2), x()]));
}

#[test]
fn differentiate_power_rule() {
    let e = parse("x^3").unwrap();
    let d2 = e.differentiate("x", 2).unwrap();
    assert_eq!(d2, Expr::product(vec![Expr::int(6), x()]));
}

#[test]
fn differentiate_product_rule() {
    let e = parse("exp(x)*u").unwrap();
    assert_eq!(e.differentiate("u", 1).unwrap(), Expr::apply(Func::Exp, x()));
}

#[test]
fn differentiate_periodic() {
    let e = parse("sin(x)").unwrap();
    assert_eq!(e.differentiate("x", 4).unwrap(), e);
}

#[test]
fn differentiate_keeps_variable_set() {
    let e = parse("x^2*u + sin(x*u)").unwrap();
    let d = e.differentiate("x", 1).unwrap();
    assert!(d.free_vars().is_subset(&e.free_vars()));
}

#[test]
fn evaluate_basics() {
    let e = parse("x^2+1").unwrap();
    assert_eq!(e.evaluate(&Bindings::of(&[("x", 2.0)])).unwrap(), 5.0);
}

#[test]
fn evaluate_gamma_half() {
    let e = parse("gamma(x)").unwrap();
    let v = e.evaluate(&Bindings::of(&[("x", 0.5)])).unwrap();
    assert_relative_eq!(v, std::f64::consts::PI.sqrt(), max_relative = 1e-12);
}

#[test]
fn evaluate_domain_errors() {
    let log = parse("log(x)").unwrap();
    assert!(matches!(
        log.evaluate(&Bindings::of(&[("x", -1.0)])),
        Err(ExprError::Domain(_))
    ));
    let g = parse("gamma(x)").unwrap();
    assert!(matches!(
        g.evaluate(&Bindings::of(&[("x", -2.0)])),
        Err(ExprError::Domain(_))
    ));
    let e = parse("x^2+1").unwrap();
    assert!(matches!(
        e.evaluate(&Bindings::new()),
        Err(ExprError::UnboundVariable(_))
    ));
}

#[test]
fn gamma_chain_rule_unsupported() {
    let e = parse("gamma(x^2)").unwrap();
    assert!(matches!(
        e.differentiate("x", 1),
        Err(ExprError::UnsupportedDerivative(_))
    ));
    // ... but gamma with a constant argument differentiates to zero.
    let c = parse("gamma(1/2)*x").unwrap();
    assert_eq!(
        c.differentiate("x", 1).unwrap(),
        Expr::apply(Func::Gamma, Expr::rat(1, 2))
    );
}

#[test]
fn substitution_recanonicalizes() {
    let e = parse("x*u + u^2").unwrap();
    let s = e.substitute("u", &parse("2*x").unwrap());
    assert_eq!(s, parse("2*x^2 + 4*x^2").unwrap());
    assert_eq!(s, parse("6*x^2").unwrap());
}

#[test]
fn like_terms_merge_and_cancel() {
    assert_eq!(parse("x + x").unwrap(), parse("2*x").unwrap());
    assert!(parse("x - x").unwrap().is_zero());
    assert_eq!(parse("2*x*u - 5*u*x").unwrap(), parse("-3*x*u").unwrap());
}

#[test]
fn structural_linearity_of_derivative() {
    // differentiate(a e1 + b e2) == a differentiate(e1) + b differentiate(e2)
    let e1 = parse("sin(x)*x").unwrap();
    let e2 = parse("exp(x) + x^4").unwrap();
    let (a, b) = (Expr::rat(3, 2), Expr::int(-2));
    let lhs = Expr::sum(vec![
        Expr::product(vec![a.clone(), e1.clone()]),
        Expr::product(vec![b.clone(), e2.clone()]),
    ])
    .differentiate("x", 1)
    .unwrap();
    let rhs = Expr::sum(vec![
        Expr::product(vec![a, e1.differentiate("x", 1).unwrap()]),
        Expr::product(vec![b, e2.differentiate("x", 1).unwrap()]),
    ]);
    assert_eq!(lhs, rhs);
}

// ---------------------------------------------------------------------
// Random-tree properties
// ---------------------------------------------------------------------

/// Random canonical expression trees over variables {x, y, u}, depth <= 6.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-9i64..10).prop_map(Expr::int),
        ((-9i64..10), (1i64..7)).prop_map(|(n, d)| Expr::rat(n, d)),
        (-4.0f64..4.0).prop_map(|x| Expr::dec((x * 64.0).round() / 64.0)),
        prop_oneof![Just("x"), Just("y"), Just("u")].prop_map(Expr::var),
    ];
    leaf.prop_recursive(5, 64, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::product),
            (inner.clone(), -3i64..4).prop_map(|(b, k)| Expr::pow(b, Expr::int(k))),
            (inner.clone(), 1i64..4, 2i64..4).prop_map(|(b, n, d)| Expr::pow(b, Expr::rat(n, d))),
            inner.clone().prop_map(Expr::neg),
            (
                prop_oneof![
                    Just(Func::Exp),
                    Just(Func::Log),
                    Just(Func::Sin),
                    Just(Func::Cos),
                    Just(Func::Sqrt)
                ],
                inner
            )
                .prop_map(|(f, a)| Expr::apply(f, a)),
        ]
    })
}

/// Smooth expressions (safe to differentiate and evaluate away from 0) used
/// for the derivative-vs-finite-difference property.
fn arb_smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (1i64..5).prop_map(Expr::int),
        ((1i64..7), (1i64..5)).prop_map(|(n, d)| Expr::rat(n, d)),
        Just(Expr::var("x")),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
            prop::collection::vec(inner.clone(), 2..3).prop_map(Expr::product),
            (inner.clone(), 1i64..4).prop_map(|(b, k)| Expr::pow(b, Expr::int(k))),
            inner.clone().prop_map(|a| Expr::apply(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::apply(Func::Cos, a)),
            inner.prop_map(|a| Expr::apply(Func::Exp, Expr::product(vec![Expr::rat(1, 4), a]))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let printed = e.to_string();
        let reparsed = parse(&printed)
            .unwrap_or_else(|err| panic!("failed to reparse `{printed}`: {err}"));
        prop_assert_eq!(&reparsed, &e, "printed form `{}`", printed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn derivative_matches_central_difference(e in arb_smooth_expr(), x0 in 0.3f64..1.7) {
        let d = e.differentiate("x", 1).unwrap();
        let at = |x: f64| e.evaluate(&Bindings::of(&[("x", x)]));
        let h = 1e-5;
        let (fp, fm) = match (at(x0 + h), at(x0 - h)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Ok(()), // domain edge; skip
        };
        let sym = match d.evaluate(&Bindings::of(&[("x", x0)])) {
            Ok(v) => v,
            Err(_) => return Ok(()),
        };
        let fd = (fp - fm) / (2.0 * h);
        let val = at(x0).unwrap_or(0.0).abs();
        if !fd.is_finite() || !sym.is_finite() || val > 1e6 || fd.abs() > 1e6 {
            return Ok(()); // steep/overflowing instance, not informative
        }
        prop_assert!(
            (sym - fd).abs() <= 1e-4 * (1.0 + val + sym.abs()),
            "sym={} fd={} at x={} for {}", sym, fd, x0, e
        );
    }
}
