mod common;

use algebroid::contact::{check_almost_contact, compatible_metric, AlmostContactStructure};
use algebroid::product::{cone_complex_structure, direct_product, product_acr, product_hermitian, AlmostComplexStructure};
use algebroid::{fixtures, BundleMetric, ChartBox, Expr, LieAlgebroid, SampleGrid, TensorField};
use common::names;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn grid(dim: usize) -> SampleGrid {
    SampleGrid::halton(ChartBox::cube(dim, 1.0), 50, 13).unwrap()
}

fn rank_one(var: &str) -> AlmostContactStructure {
    fixtures::tr1_structure().renamed(names(&[var])).unwrap()
}

fn plane() -> AlmostComplexStructure {
    let e = LieAlgebroid::tangent(names(&["u", "v"]));
    let j = vec![vec![Expr::zero(), -Expr::one()], vec![Expr::one(), Expr::zero()]];
    AlmostComplexStructure::from_components(&e, &j).unwrap().with_metric(BundleMetric::euclidean(2)).unwrap()
}

fn sasakian_pair() -> (AlmostContactStructure, AlmostContactStructure) {
    let a = fixtures::heisenberg_half();
    let b = a.renamed(names(&["u", "v", "w"])).unwrap();
    (a, b)
}

#[test]
fn product_of_lines_is_tr2() {
    let p = direct_product(&fixtures::tr1(), &LieAlgebroid::tangent(names(&["y"]))).unwrap();
    let e = p.algebroid();
    assert_eq!(e.rank(), 2);
    assert_eq!(e.variables(), names(&["x", "y"]).as_slice());
    for a in 0..2 {
        for i in 0..2 {
            assert_eq!(e.anchor(a, i).as_const(), Some(if a == i { 1.0 } else { 0.0 }));
        }
        for b in 0..2 {
            for c in 0..2 {
                assert!(e.structure(c, a, b).is_zero());
            }
        }
    }
    assert_eq!(e.labels()[1], format!("{}|2", fixtures::tr1().labels()[0]));
}

#[test]
fn mixed_brackets_vanish_and_validation_is_preserved() {
    let so3 = fixtures::so3_action();
    let p = direct_product(&so3, &fixtures::tr1()).unwrap();
    let e = p.algebroid();
    for a in 0..3 {
        let s = TensorField::frame_section(4, a);
        let t = TensorField::frame_section(4, 3);
        assert!(e.bracket(&s, &t).unwrap().components().iter().all(Expr::is_zero));
    }
    assert!(e.validate(&grid(4)).passed());
    let bad = direct_product(&fixtures::broken_jacobi(), &fixtures::tr1()).unwrap();
    assert!(!bad.algebroid().validate(&grid(4)).passed());
}

#[test]
fn colliding_variables_are_rejected() {
    assert!(direct_product(&fixtures::tr3(), &fixtures::tr3()).is_err());
    assert!(cone_complex_structure(&fixtures::heisenberg(), &fixtures::tr3()).is_err());
}

#[test]
fn lifts_and_projections() {
    let (a, b) = sasakian_pair();
    let p = direct_product(a.algebroid(), b.algebroid()).unwrap();
    let xi = p.lift_second(b.xi()).unwrap();
    assert_eq!(xi.rank(), 6);
    let back = p.project_second(&xi).unwrap();
    let pt = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
    let v = back.eval(&pt).unwrap().vector();
    assert_eq!(v.as_slice(), b.xi().eval(&pt[3..]).unwrap().vector().as_slice());
    assert!(p.project_first(&xi).unwrap().components().iter().all(Expr::is_zero));
    assert!(p.lift_first(b.xi()).is_ok());
    assert!(p.lift_first(&TensorField::frame_section(2, 0)).is_err());
}

#[test]
fn plane_times_rank_one_is_almost_contact() {
    let (prod, acs) = product_acr(&plane(), &rank_one("t")).unwrap();
    assert_eq!(prod.algebroid().rank(), 3);
    let r = check_almost_contact(&acs, &grid(3));
    assert!(r.passed(), "{:?}", r);
    let v = acs.value_at(&[0.3, 0.1, -0.5]).unwrap();
    assert_eq!(v.eta.dot(&v.xi), 1.0);
}

#[test]
fn hermitian_product_on_reeb_sections() {
    let (a, b) = sasakian_pair();
    let (prod, h) = product_hermitian(&a, &b).unwrap();
    let xi1 = prod.lift_first(a.xi()).unwrap();
    let xi2 = prod.lift_second(b.xi()).unwrap();
    for p in grid(6).points() {
        let j1 = h.j().apply(&xi1).unwrap();
        assert!(common::diff_at(&j1, &xi2, p) < 1e-12);
        let j2 = h.j().apply(&xi2).unwrap();
        assert!(common::diff_at(&j2, &xi1.scale_const(-1.0), p) < 1e-12);
        let jj = h.j().apply(&j1).unwrap();
        assert!(common::diff_at(&jj, &xi1.scale_const(-1.0), p) < 1e-12);
    }
}

#[test]
fn hermitian_product_of_normal_factors_is_integrable() {
    let g = grid(6);
    let (a, b) = sasakian_pair();
    let (_, h) = product_hermitian(&a, &b).unwrap();
    let r = h.hermitian_report(&g).unwrap();
    assert!(r.passed(), "{:?}", r);
    let plain = fixtures::heisenberg().renamed(names(&["u", "v", "w"])).unwrap();
    let (_, h) = product_hermitian(&fixtures::heisenberg(), &plain).unwrap();
    assert!(h.nijenhuis_check(&g).unwrap().passed);
    let twisted = fixtures::twisted().renamed(names(&["u", "v", "w"])).unwrap();
    let (_, h) = product_hermitian(&a, &twisted).unwrap();
    assert!(h.check(&g).passed());
    assert!(!h.nijenhuis_check(&g).unwrap().passed);
}

#[test]
fn cone_structure() {
    let g = grid(4);
    let acs = fixtures::heisenberg_half();
    let (prod, h) = cone_complex_structure(&acs, &fixtures::line("t")).unwrap();
    let xi = prod.lift_first(acs.xi()).unwrap();
    let sl = TensorField::frame_section(4, 3);
    for p in g.points() {
        assert!(common::diff_at(&h.j().apply(&xi).unwrap(), &sl, p) < 1e-12);
        assert!(common::diff_at(&h.j().apply(&sl).unwrap(), &xi.scale_const(-1.0), p) < 1e-12);
    }
    let r = h.hermitian_report(&g).unwrap();
    assert!(r.passed(), "{:?}", r);
    for acs in [fixtures::heisenberg(), fixtures::kenmotsu()] {
        let (_, h) = cone_complex_structure(&acs, &fixtures::line("t")).unwrap();
        assert!(h.nijenhuis_check(&g).unwrap().passed);
    }
    let (_, h) = cone_complex_structure(&fixtures::twisted(), &fixtures::line("t")).unwrap();
    assert!(!h.nijenhuis_check(&g).unwrap().passed);
    assert!(cone_complex_structure(&acs, &fixtures::tr1().renamed(names(&["t"])).unwrap()).is_ok());
}

#[test]
fn odd_rank_complex_structure_is_rejected() {
    assert!(AlmostComplexStructure::new(&fixtures::tr3(), TensorField::identity(3)).is_err());
}

fn constant_matrix(v: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, v)
}

fn to_exprs(m: &DMatrix<f64>) -> Vec<Vec<Expr>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| Expr::constant(m[(i, j)])).collect()).collect()
}

fn random_metric_structure(base: AlmostContactStructure, c: &[f64]) -> AlmostContactStructure {
    let seed = BundleMetric::from_upper(3, |a, b| {
        let k = [[0, 1, 2], [1, 3, 4], [2, 4, 5]][a][b];
        Expr::constant(if a == b { 1.0 } else { 0.0 } + c[k])
    });
    let bare = AlmostContactStructure::new(base.algebroid(), base.f().clone(), base.xi().clone(), base.eta().clone()).unwrap();
    let g = compatible_metric(&bare, &seed).unwrap();
    bare.with_metric(g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn product_acr_is_almost_contact_metric(a in proptest::collection::vec(-0.4f64..0.4, 4), c in proptest::collection::vec(-0.3f64..0.3, 6)) {
        let frame = constant_matrix(&[1.0 + a[0], a[1], a[2], 1.0 + a[3]], 2);
        let inv = frame.clone().try_inverse().unwrap();
        let rot = constant_matrix(&[0.0, -1.0, 1.0, 0.0], 2);
        let j = &frame * rot * &inv;
        let g = inv.transpose() * &inv;
        let e = LieAlgebroid::tangent(names(&["u", "v"]));
        let h = AlmostComplexStructure::from_components(&e, &to_exprs(&j)).unwrap()
            .with_metric(BundleMetric::new(to_exprs(&g)).unwrap()).unwrap();
        prop_assert!(h.check(&grid(2)).passed());
        let acr = random_metric_structure(fixtures::twisted(), &c);
        let (_, acs) = product_acr(&h, &acr).unwrap();
        let r = check_almost_contact(&acs, &grid(5));
        prop_assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn product_hermitian_squares_to_minus_one(c1 in proptest::collection::vec(-0.3f64..0.3, 6), c2 in proptest::collection::vec(-0.3f64..0.3, 6)) {
        let a = random_metric_structure(fixtures::twisted(), &c1);
        let b = random_metric_structure(fixtures::heisenberg(), &c2).renamed(names(&["u", "v", "w"])).unwrap();
        let (_, h) = product_hermitian(&a, &b).unwrap();
        let r = h.check(&grid(6));
        prop_assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        let p = [0.2, -0.3, 0.4, 0.1, 0.5, -0.6];
        let jv = h.j().eval(&p).unwrap().matrix();
        let x = DVector::from_row_slice(&c1);
        prop_assert!((&jv * &jv * &x + &x).amax() < 1e-10);
    }
}
