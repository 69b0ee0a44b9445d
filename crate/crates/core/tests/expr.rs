mod common;

use algebroid::expr::{determinant, inverse, parse, Expr, ParseError};
use common::{ex, fd_relative_error, point, smooth_text, XYZ};
use proptest::prelude::*;

#[test]
fn parses_and_evaluates() {
    let e = ex("2*x*y - z^2 + sin(x)", &XYZ);
    let v = e.eval(&[0.5, 2.0, 3.0]).unwrap();
    assert!((v - (2.0 - 9.0 + 0.5f64.sin())).abs() < 1e-15);
}

#[test]
fn unary_minus_binds_looser_than_power() {
    let e = ex("-x^2", &XYZ);
    assert_eq!(e.eval(&[3.0, 0.0, 0.0]).unwrap(), -9.0);
    let e = ex("x^-2", &XYZ);
    assert_eq!(e.eval(&[2.0, 0.0, 0.0]).unwrap(), 0.25);
}

#[test]
fn derivative_examples() {
    let e = ex("y*z^2", &XYZ);
    assert_eq!(e.derivative(2).eval(&[0.0, 1.0, 3.0]).unwrap(), 6.0);
    let e = ex("exp(x)*cos(y)", &XYZ);
    let d = e.derivative(1).eval(&[0.0, 1.0, 0.0]).unwrap();
    assert!((d + 1f64.sin()).abs() < 1e-15);
    assert!(ex("y^2", &XYZ).derivative(0).is_zero());
}

#[test]
fn parse_errors_carry_position() {
    match parse("x + * y", &XYZ) {
        Err(e) => assert_eq!(e.position(), 4),
        Ok(_) => panic!("should not parse"),
    }
    assert!(matches!(parse("w + 1", &XYZ), Err(ParseError::UnknownIdentifier { .. })));
    assert!(parse("sin(x", &XYZ).is_err());
    assert!(parse("tan(x)", &XYZ).is_err());
}

#[test]
fn domain_errors_are_reported() {
    assert!(ex("log(x)", &XYZ).eval(&[-1.0, 0.0, 0.0]).is_err());
    assert!(ex("sqrt(x)", &XYZ).eval(&[-1.0, 0.0, 0.0]).is_err());
    assert!(ex("1/x", &XYZ).eval(&[0.0, 0.0, 0.0]).is_err());
}

#[test]
fn symbolic_determinant_and_inverse() {
    let m = vec![
        vec![ex("1 + y^2", &XYZ), ex("x", &XYZ)],
        vec![ex("x", &XYZ), ex("1", &XYZ)],
    ];
    let p = [0.3, 0.7, 0.0];
    let det = determinant(&m).eval(&p).unwrap();
    assert!((det - (1.0 + 0.49 - 0.09)).abs() < 1e-14);
    let inv = inverse(&m).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let s: f64 = (0..2).map(|k| m[i][k].eval(&p).unwrap() * inv[k][j].eval(&p).unwrap()).sum();
            assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
    }
    let singular = vec![vec![ex("x", &XYZ), ex("0", &XYZ)], vec![ex("y", &XYZ), ex("0", &XYZ)]];
    assert!(inverse(&singular).is_none());
}

#[test]
fn simplification_keeps_zero_structural() {
    let x = Expr::var(0, "x");
    assert!((x.clone() * Expr::zero()).is_zero());
    assert!((x.clone() - x.clone()).eval(&[4.0]).unwrap() == 0.0);
    assert!((Expr::zero() + Expr::one()).is_one());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn derivative_matches_finite_differences(text in smooth_text(&XYZ), p in point(3), i in 0usize..3) {
        let e = ex(&text, &XYZ);
        prop_assert!(fd_relative_error(&e, &p, i) < 1e-6, "{} at {:?}", text, p);
    }

    #[test]
    fn display_round_trips(text in smooth_text(&XYZ), p in point(3)) {
        let e = ex(&text, &XYZ);
        let back = ex(&e.to_string(), &XYZ);
        let (a, b) = (e.eval(&p).unwrap(), back.eval(&p).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{} vs {}", e, back);
    }

    #[test]
    fn derivatives_commute(text in smooth_text(&XYZ), p in point(3), i in 0usize..3, j in 0usize..3) {
        let e = ex(&text, &XYZ);
        let a = e.derivative(i).derivative(j).eval(&p).unwrap();
        let b = e.derivative(j).derivative(i).eval(&p).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn product_rule(a in smooth_text(&XYZ), b in smooth_text(&XYZ), p in point(3), i in 0usize..3) {
        let (ea, eb) = (ex(&a, &XYZ), ex(&b, &XYZ));
        let lhs = (ea.clone() * eb.clone()).derivative(i).eval(&p).unwrap();
        let rhs = ea.derivative(i).eval(&p).unwrap() * eb.eval(&p).unwrap()
            + ea.eval(&p).unwrap() * eb.derivative(i).eval(&p).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }
}

#[test]
fn documented_examples() {
    let v = ["x1", "x2", "x3"];
    assert_eq!(ex("x1*x2 + 1", &v).eval(&[2.0, 3.0, 0.0]).unwrap(), 7.0);
    assert_eq!(ex("exp(2*x3)", &v).eval(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
    let d = ex("x1*x2", &v).derivative(0);
    assert_eq!(d.eval(&[5.0, 3.0, 0.0]).unwrap(), 3.0);
    assert_eq!(ex("sin(x1)", &v).derivative(0).eval(&[0.0; 3]).unwrap(), 1.0);
    let e = ex("exp(2*x3)", &v);
    let p = [0.0, 0.0, 0.5];
    let sym = e.derivative(2).eval(&p).unwrap();
    assert!((sym - 2.0 * std::f64::consts::E).abs() < 1e-14);
    let fd = algebroid::expr::central_difference(&e, &p, 2, 1e-5).unwrap();
    assert!((fd - sym).abs() / sym < 1e-8);
    assert!(ex("x1/x2", &v).eval(&[1.0, 0.0, 0.0]).is_err());
    assert_eq!(ex("sqrt(x1)", &v).eval(&[4.0, 0.0, 0.0]).unwrap(), 2.0);
    assert!((ex("x1^3 - 2*x1", &v).eval(&[1.5, 0.0, 0.0]).unwrap() - 0.375).abs() < 1e-15);
}
