//! Reference algebroids and structures used by the tests, the acceptance suite
//! and the CLI gallery.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::algebroid::LieAlgebroid;
use crate::contact::{compatible_metric, AlmostContactStructure};
use crate::expr::{parse, Expr};
use crate::riemann::BundleMetric;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn ex(text: &str, vars: &[&str]) -> Expr {
    parse(text, vars).expect("fixture expression parses")
}

fn matrix(rows: &[&[&str]], vars: &[&str]) -> Vec<Vec<Expr>> {
    rows.iter().map(|r| r.iter().map(|t| ex(t, vars)).collect()).collect()
}

fn row(items: &[&str], vars: &[&str]) -> Vec<Expr> {
    items.iter().map(|t| ex(t, vars)).collect()
}

const XYZ: [&str; 3] = ["x", "y", "z"];

/// `T R` over the variable `x`.
pub fn tr1() -> LieAlgebroid {
    LieAlgebroid::tangent(names(&["x"]))
}

/// `T R³` over `(x, y, z)`.
pub fn tr3() -> LieAlgebroid {
    LieAlgebroid::tangent(names(&XYZ))
}

/// Rank-1 structure `F = 0, ξ = e, η = e*, g = 1` on `T R`.
pub fn tr1_structure() -> AlmostContactStructure {
    AlmostContactStructure::from_components(&tr1(), &[vec![Expr::zero()]], vec![Expr::one()], vec![Expr::one()])
        .and_then(|s| s.with_metric(BundleMetric::euclidean(1)))
        .expect("rank-1 fixture")
}

/// The Heisenberg contact structure `η = dz − y dx` on `T R³`, with
/// `g = (1+y²)dx² + dy² + dz² − 2y dx dz` and `F∂x = −∂y`, `F∂y = ∂x + y∂z`.
///
/// Here `d η = Ω` with the plain `d`.
pub fn heisenberg() -> AlmostContactStructure {
    let f = matrix(&[&["0", "1", "0"], &["-1", "0", "0"], &["0", "y", "0"]], &XYZ);
    let g = BundleMetric::new(matrix(&[&["1 + y^2", "0", "-y"], &["0", "1", "0"], &["-y", "0", "1"]], &XYZ))
        .expect("symmetric");
    AlmostContactStructure::from_components(&tr3(), &f, row(&["0", "0", "1"], &XYZ), row(&["-y", "0", "1"], &XYZ))
        .and_then(|s| s.with_metric(g))
        .expect("Heisenberg fixture")
}

/// [`heisenberg`] rescaled by `η/2`, `2ξ`, `g/4`: Sasakian in the half convention.
pub fn heisenberg_half() -> AlmostContactStructure {
    let f = matrix(&[&["0", "1", "0"], &["-1", "0", "0"], &["0", "y", "0"]], &XYZ);
    let g = BundleMetric::new(matrix(
        &[&["(1 + y^2)/4", "0", "-y/4"], &["0", "1/4", "0"], &["-y/4", "0", "1/4"]],
        &XYZ,
    ))
    .expect("symmetric");
    AlmostContactStructure::from_components(&tr3(), &f, row(&["0", "0", "2"], &XYZ), row(&["-y/2", "0", "1/2"], &XYZ))
        .and_then(|s| s.with_metric(g))
        .expect("Sasakian fixture")
}

/// Warped structure `g = dz² + e^{2z}(dx² + dy²)`, `ξ = ∂z`, `η = dz`, `F∂x = ∂y`, `F∂y = −∂x`.
pub fn kenmotsu() -> AlmostContactStructure {
    let f = matrix(&[&["0", "-1", "0"], &["1", "0", "0"], &["0", "0", "0"]], &XYZ);
    let g = BundleMetric::new(matrix(&[&["exp(2*z)", "0", "0"], &["0", "exp(2*z)", "0"], &["0", "0", "1"]], &XYZ))
        .expect("symmetric");
    AlmostContactStructure::from_components(&tr3(), &f, row(&["0", "0", "1"], &XYZ), row(&["0", "0", "1"], &XYZ))
        .and_then(|s| s.with_metric(g))
        .expect("Kenmotsu fixture")
}

/// A non-normal almost contact metric structure: `ξ = ∂z`, `η = dz`, and an
/// `F` on `span{∂x, ∂y}` rotating with `z`; metric from the Euclidean seed.
pub fn twisted() -> AlmostContactStructure {
    let f = matrix(&[&["z", "-(1 + z^2)", "0"], &["1", "-z", "0"], &["0", "0", "0"]], &XYZ);
    let acs = AlmostContactStructure::from_components(&tr3(), &f, row(&["0", "0", "1"], &XYZ), row(&["0", "0", "1"], &XYZ))
        .expect("twisted fixture");
    let g = compatible_metric(&acs, &BundleMetric::euclidean(3)).expect("rank 3");
    acs.with_metric(g).expect("rank 3")
}

/// Action algebroid of `so(3)` on `R³`: `ρ_a = ε_{aji} x_i ∂_j`, `C^c_ab = ε_abc`.
pub fn so3_action() -> LieAlgebroid {
    let v = ["x1", "x2", "x3"];
    let anchor = matrix(&[&["0", "x3", "-x2"], &["-x3", "0", "x1"], &["x2", "-x1", "0"]], &v);
    LieAlgebroid::from_brackets(names(&v), anchor, |c, a, b| {
        let (_, sorted) = crate::tensor::sort_sign(&[a, b, c]);
        if sorted != [0, 1, 2] {
            return Expr::zero();
        }
        Expr::constant(crate::tensor::sort_sign(&[a, b, c]).0 as f64)
    })
    .expect("so(3) fixture")
}

/// Zero anchor, `[e1, e2] = x1 e3`, `[e1, e3] = e1`: violates Jacobi.
pub fn broken_jacobi() -> LieAlgebroid {
    let v = ["x1", "x2", "x3"];
    let zero = vec![vec![Expr::zero(); 3]; 3];
    LieAlgebroid::from_brackets(names(&v), zero, |c, a, b| match (c, a, b) {
        (2, 0, 1) => ex("x1", &v),
        (0, 0, 2) => Expr::one(),
        _ => Expr::zero(),
    })
    .expect("broken fixture")
}

/// Trivial line algebroid over `var`: zero anchor, zero bracket.
pub fn line(var: &str) -> LieAlgebroid {
    LieAlgebroid::new(names(&[var]), vec![vec![Expr::zero()]], vec![vec![vec![Expr::zero()]]]).expect("line algebroid")
}
