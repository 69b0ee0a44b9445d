mod common;

use algebroid::algebroid::{field_check, LieAlgebroid};
use algebroid::expr::Expr;
use algebroid::fixtures;
use algebroid::tensor::wedge;
use algebroid::{ChartBox, Convention, SampleGrid, TensorField, Variance};
use common::{diff_at, ex, exprs, max_at, point, texts, XYZ};
use proptest::prelude::*;

fn grid3() -> SampleGrid {
    SampleGrid::halton(ChartBox::cube(3, 1.5), 50, 7).unwrap()
}

fn sec(items: &[&str]) -> TensorField {
    TensorField::section(items.iter().map(|t| ex(t, &XYZ)).collect())
}

fn form1(items: &[&str]) -> TensorField {
    TensorField::one_form(items.iter().map(|t| ex(t, &XYZ)).collect())
}

fn scalar(e: Expr) -> TensorField {
    TensorField::scalar(3, e)
}

#[test]
fn tangent_frame_brackets_vanish() {
    let e = fixtures::tr3();
    for a in 0..3 {
        for b in 0..3 {
            let r = e.bracket(&TensorField::frame_section(3, a), &TensorField::frame_section(3, b)).unwrap();
            assert!(r.components().iter().all(|c| c.is_zero()));
        }
    }
}

#[test]
fn bracket_example_on_tr3() {
    let e = fixtures::tr3();
    let r = e.bracket(&sec(&["0", "1", "0"]), &sec(&["1", "0", "y"])).unwrap();
    let p = [0.2, -0.4, 1.1];
    assert_eq!(r.eval(&p).unwrap().vector().as_slice(), &[0.0, 0.0, 1.0]);
}

#[test]
fn anchor_examples() {
    let e = LieAlgebroid::tangent(common::names(&["x1", "x2"]));
    let x1 = ex("x1", &["x1", "x2"]);
    assert_eq!(e.anchor_derivative(0, &x1).eval(&[0.3, 0.1]).unwrap(), 1.0);
    assert!(e.anchor_derivative(1, &Expr::constant(5.0)).is_zero());
    let tr3 = fixtures::tr3();
    let f = tr3.derive_along(sec(&["0", "0", "y"]).as_vector(), &ex("z^2", &XYZ));
    let p = [0.5, 1.5, -2.0];
    assert!((f.eval(&p).unwrap() - 2.0 * 1.5 * -2.0).abs() < 1e-15);
}

#[test]
fn validate_fixtures() {
    let g = grid3();
    assert!(fixtures::tr3().validate(&g).passed());
    assert!(fixtures::so3_action().validate(&g).passed());
    let broken = fixtures::broken_jacobi().validate(&g);
    assert!(!broken.passed());
    let jacobi = broken.get("jacobi").unwrap();
    assert!(!jacobi.passed);
    assert!(jacobi.worst_point.is_some());
    assert!(broken.holds("structure_skew"));
}

#[test]
fn contact_form_examples_on_tr3() {
    let e = fixtures::tr3();
    let eta = form1(&["-y", "0", "1"]);
    let d = e.exterior_derivative(&eta).unwrap();
    let v = d.evaluate_on(&[&sec(&["0", "1", "0"]), &sec(&["1", "0", "y"])]).unwrap();
    let p = [0.3, 0.8, -0.2];
    assert!((v.eval(&p).unwrap().scalar() + 1.0).abs() < 1e-15);
    let top = wedge(&eta, &d).unwrap();
    assert!((top.eval(&p).unwrap().get(&[0, 1, 2]) - 1.0).abs() < 1e-15);
    let xi = sec(&["0", "0", "1"]);
    assert!(max_at(&e.interior_product(&xi, &d).unwrap(), &p) < 1e-15);
    assert!(max_at(&e.lie_derivative(&xi, &eta).unwrap(), &p) < 1e-15);
    let half = e.exterior_derivative_with(&eta, Convention::Half).unwrap();
    assert!((half.eval(&p).unwrap().get(&[0, 1]) - 0.5).abs() < 1e-15);
}

#[test]
fn constant_form_is_closed_when_structure_vanishes() {
    let e = fixtures::tr3();
    let d = e.exterior_derivative(&TensorField::dual_frame_form(3, 0)).unwrap();
    assert!(d.components().iter().all(|c| c.is_zero()));
}

#[test]
fn interior_and_wedge_normalization() {
    let e = fixtures::tr3();
    let e1 = TensorField::dual_frame_form(3, 0);
    let e2 = TensorField::dual_frame_form(3, 1);
    let s1 = TensorField::frame_section(3, 0);
    let s2 = TensorField::frame_section(3, 1);
    assert!(e.interior_product(&s1, &e1).unwrap().as_scalar().is_one());
    assert!(max_at(&wedge(&e1, &e1).unwrap(), &[0.0; 3]) == 0.0);
    let w = wedge(&e1, &e2).unwrap();
    assert_eq!(w.evaluate_on(&[&s1, &s2]).unwrap().eval(&[0.0; 3]).unwrap().scalar(), 1.0);
}

#[test]
fn nijenhuis_of_identity_and_zero() {
    let e = fixtures::so3_action();
    let g = grid3();
    let id = e.nijenhuis(&TensorField::identity(3)).unwrap();
    assert!(field_check(&g, "n_identity", &id, 1e-12).passed);
    let zero = e.nijenhuis(&TensorField::zero(3, Variance::ENDOMORPHISM)).unwrap();
    assert!(zero.components().iter().all(|c| c.is_zero()));
}

#[test]
fn duplicate_variables_and_skew_are_rejected() {
    assert!(LieAlgebroid::new(common::names(&["x", "x"]), vec![vec![Expr::zero(); 2]], vec![vec![vec![Expr::zero()]]]).is_err());
    let v = common::names(&["x"]);
    let bad = vec![vec![vec![Expr::zero(), Expr::one()], vec![Expr::one(), Expr::zero()]]; 2];
    assert!(LieAlgebroid::new(v, vec![vec![Expr::one()], vec![Expr::zero()]], bad).is_err());
}

fn algebroids() -> Vec<LieAlgebroid> {
    let so3 = fixtures::so3_action().renamed(common::names(&XYZ)).unwrap();
    vec![fixtures::tr3(), so3]
}

fn form2(c: &[Expr]) -> TensorField {
    TensorField::form(3, 2, |i| match (i[0], i[1]) {
        (0, 1) => c[0].clone(),
        (0, 2) => c[1].clone(),
        _ => c[2].clone(),
    })
}

const T: f64 = 1e-9;

fn close(a: &TensorField, b: &TensorField, p: &[f64]) -> bool {
    let scale = max_at(a, p).max(max_at(b, p)).max(1.0);
    diff_at(a, b, p) <= T * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn d_squared_vanishes(f in texts(&XYZ, 1), w in texts(&XYZ, 3), p in point(3)) {
        for e in algebroids() {
            let f = scalar(ex(&f[0], &XYZ));
            let ddf = e.exterior_derivative(&e.exterior_derivative(&f).unwrap()).unwrap();
            prop_assert!(max_at(&ddf, &p) < T * 100.0);
            let w = TensorField::one_form(exprs(&w, &XYZ));
            let ddw = e.exterior_derivative(&e.exterior_derivative(&w).unwrap()).unwrap();
            prop_assert!(max_at(&ddw, &p) < T * 100.0);
        }
    }

    #[test]
    fn bracket_is_skew_and_leibniz(s in texts(&XYZ, 3), t in texts(&XYZ, 3), f in texts(&XYZ, 1), p in point(3)) {
        for e in algebroids() {
            let s = TensorField::section(exprs(&s, &XYZ));
            let t = TensorField::section(exprs(&t, &XYZ));
            let f = ex(&f[0], &XYZ);
            let st = e.bracket(&s, &t).unwrap();
            let ts = e.bracket(&t, &s).unwrap();
            prop_assert!(close(&st, &ts.scale_const(-1.0), &p));
            prop_assert!(max_at(&e.bracket(&s, &s).unwrap(), &p) < T);
            let lhs = e.bracket(&s, &t.scale(&f)).unwrap();
            let rhs = st.scale(&f).add(&t.scale(&e.derive_along(s.as_vector(), &f))).unwrap();
            prop_assert!(close(&lhs, &rhs, &p));
            let lie = e.lie_derivative(&s, &t).unwrap();
            let lie_rev = e.lie_derivative(&t, &s).unwrap();
            prop_assert!(close(&lie, &lie_rev.scale_const(-1.0), &p));
            prop_assert!(close(&lie, &st, &p));
        }
    }

    #[test]
    fn jacobi_on_random_sections(a in texts(&XYZ, 3), b in texts(&XYZ, 3), c in texts(&XYZ, 3), p in point(3)) {
        let e = algebroids().pop().unwrap();
        let (a, b, c) = (
            TensorField::section(exprs(&a, &XYZ)),
            TensorField::section(exprs(&b, &XYZ)),
            TensorField::section(exprs(&c, &XYZ)),
        );
        let j1 = e.bracket(&a, &e.bracket(&b, &c).unwrap()).unwrap();
        let j2 = e.bracket(&b, &e.bracket(&c, &a).unwrap()).unwrap();
        let j3 = e.bracket(&c, &e.bracket(&a, &b).unwrap()).unwrap();
        let sum = j1.add(&j2).unwrap().add(&j3).unwrap();
        let scale = max_at(&j1, &p).max(max_at(&j2, &p)).max(1.0);
        prop_assert!(max_at(&sum, &p) < T * scale);
    }

    #[test]
    fn derivation_rule_for_d(a in texts(&XYZ, 3), b in texts(&XYZ, 3), p in point(3)) {
        for e in algebroids() {
            let a = TensorField::one_form(exprs(&a, &XYZ));
            let b = TensorField::one_form(exprs(&b, &XYZ));
            let lhs = e.exterior_derivative(&wedge(&a, &b).unwrap()).unwrap();
            let da = e.exterior_derivative(&a).unwrap();
            let db = e.exterior_derivative(&b).unwrap();
            let rhs = wedge(&da, &b).unwrap().sub(&wedge(&a, &db).unwrap()).unwrap();
            prop_assert!(close(&lhs, &rhs, &p));
        }
    }

    #[test]
    fn wedge_associative_and_graded_commutative(a in texts(&XYZ, 3), b in texts(&XYZ, 3), c in texts(&XYZ, 3), p in point(3)) {
        let a = TensorField::one_form(exprs(&a, &XYZ));
        let b = TensorField::one_form(exprs(&b, &XYZ));
        let c2 = form2(&exprs(&c, &XYZ));
        let ab = wedge(&a, &b).unwrap();
        let ba = wedge(&b, &a).unwrap();
        prop_assert!(close(&ab, &ba.scale_const(-1.0), &p));
        let c = TensorField::one_form(exprs(&c, &XYZ));
        let left = wedge(&ab, &c).unwrap();
        let right = wedge(&a, &wedge(&b, &c).unwrap()).unwrap();
        prop_assert!(close(&left, &right, &p));
        prop_assert!(close(&wedge(&a, &c2).unwrap(), &wedge(&c2, &a).unwrap(), &p));
    }

    #[test]
    fn cartan_formula(s in texts(&XYZ, 3), w in texts(&XYZ, 3), w2 in texts(&XYZ, 3), p in point(3)) {
        for e in algebroids() {
            let s = TensorField::section(exprs(&s, &XYZ));
            for w in [TensorField::one_form(exprs(&w, &XYZ)), form2(&exprs(&w2, &XYZ))] {
                let lie = e.lie_derivative(&s, &w).unwrap();
                let di = e.exterior_derivative(&e.interior_product(&s, &w).unwrap()).unwrap();
                let id = e.interior_product(&s, &e.exterior_derivative(&w).unwrap()).unwrap();
                prop_assert!(close(&lie, &di.add(&id).unwrap(), &p));
            }
        }
    }

    #[test]
    fn d_agrees_with_invariant_formula(w in texts(&XYZ, 3), s in texts(&XYZ, 3), t in texts(&XYZ, 3), p in point(3)) {
        for e in algebroids() {
            let w = TensorField::one_form(exprs(&w, &XYZ));
            let s = TensorField::section(exprs(&s, &XYZ));
            let t = TensorField::section(exprs(&t, &XYZ));
            let lhs = e.exterior_derivative(&w).unwrap().evaluate_on(&[&s, &t]).unwrap();
            let ws = w.evaluate_on(&[&s]).unwrap();
            let wt = w.evaluate_on(&[&t]).unwrap();
            let rhs = e.derive_along(s.as_vector(), wt.as_scalar())
                - e.derive_along(t.as_vector(), ws.as_scalar())
                - w.evaluate_on(&[&e.bracket(&s, &t).unwrap()]).unwrap().as_scalar().clone();
            let scale = max_at(&lhs, &p).max(1.0);
            prop_assert!(max_at(&lhs.sub(&scalar(rhs)).unwrap(), &p) < T * scale);
        }
    }

    #[test]
    fn nijenhuis_is_tensorial(a in texts(&XYZ, 9), s in texts(&XYZ, 3), t in texts(&XYZ, 3), f in texts(&XYZ, 1), p in point(3)) {
        let e = algebroids().pop().unwrap();
        let a = TensorField::endomorphism(3, |c, b| ex(&a[3 * c + b], &XYZ));
        let s = TensorField::section(exprs(&s, &XYZ));
        let t = TensorField::section(exprs(&t, &XYZ));
        let f = ex(&f[0], &XYZ);
        let lhs = e.nijenhuis_sections(&a, &s.scale(&f), &t).unwrap();
        let rhs = e.nijenhuis_sections(&a, &s, &t).unwrap().scale(&f);
        prop_assert!(close(&lhs, &rhs, &p));
        let full = e.nijenhuis(&a).unwrap().evaluate_on(&[&s, &t]).unwrap();
        prop_assert!(close(&full, &e.nijenhuis_sections(&a, &s, &t).unwrap(), &p));
    }
}
