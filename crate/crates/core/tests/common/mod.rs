#![allow(dead_code)]

use algebroid::expr::{central_difference, parse, Expr};
use algebroid::TensorField;
use proptest::prelude::*;

pub const XYZ: [&str; 3] = ["x", "y", "z"];

pub fn ex(text: &str, vars: &[&str]) -> Expr {
    parse(text, vars).unwrap()
}

pub fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Smooth expression text over `vars`, finite on `[-2, 2]^n`.
pub fn smooth_text(vars: &'static [&'static str]) -> impl Strategy<Value = String> {
    smooth_text_depth(vars, 3)
}

/// As [`smooth_text`] with a bounded nesting depth.
pub fn smooth_text_depth(vars: &'static [&'static str], depth: u32) -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        proptest::sample::select(vars.to_vec()).prop_map(|v| v.to_string()),
        (-3i32..4).prop_map(|c| format!("({})", c)),
        (1u32..9).prop_map(|c| format!("{}.5", c)),
    ];
    leaf.prop_recursive(depth, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({} + {})", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({} - {})", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({} * {})", a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({} / (1 + ({})^2))", a, b)),
            inner.clone().prop_map(|a| format!("sin({})", a)),
            inner.clone().prop_map(|a| format!("cos({})", a)),
            inner.clone().prop_map(|a| format!("exp(sin({}))", a)),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({})^2)", a)),
            inner.clone().prop_map(|a| format!("log(2 + cos({}))", a)),
            inner.clone().prop_map(|a| format!("({})^3", a)),
        ]
    })
}

pub fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.5f64..1.5, dim)
}

/// `|∂_i e − central difference| / max(1, |∂_i e|, |fd|)`, with `h = 1e-5·max(1, |x_i|)`.
pub fn fd_relative_error(e: &Expr, p: &[f64], i: usize) -> f64 {
    let h = 1e-5 * p[i].abs().max(1.0);
    let fd = central_difference(e, p, i, h).unwrap();
    let sym = e.derivative(i).eval(p).unwrap();
    (sym - fd).abs() / sym.abs().max(fd.abs()).max(1.0)
}

pub fn texts(vars: &'static [&'static str], n: usize) -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(smooth_text_depth(vars, 2), n)
}

pub fn exprs(texts: &[String], vars: &[&str]) -> Vec<Expr> {
    texts.iter().map(|t| ex(t, vars)).collect()
}

/// Max componentwise difference of two fields at `p`.
pub fn diff_at(a: &TensorField, b: &TensorField, p: &[f64]) -> f64 {
    a.eval(p).unwrap().max_abs_diff(&b.eval(p).unwrap())
}

pub fn max_at(a: &TensorField, p: &[f64]) -> f64 {
    a.eval(p).unwrap().max_abs()
}
