mod common;

use algebroid::contact::{
    check_almost_contact, check_identities, classify, compatible_metric, contact_morphism_check, contact_test,
    induce_from_pair, normality_tensors, reeb_section, volume_identity_check, volume_ratios, AlmostContactStructure,
};
use algebroid::riemann::fe_basis_values;
use algebroid::{fixtures, BundleMetric, ChartBox, Convention, Expr, LieAlgebroid, SampleGrid, TensorField};
use common::{ex, max_at, names, point, XYZ};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid3() -> SampleGrid {
    SampleGrid::halton(ChartBox::cube(3, 1.0), 50, 11).unwrap()
}

fn sec(items: &[&str]) -> TensorField {
    TensorField::section(items.iter().map(|t| ex(t, &XYZ)).collect())
}

fn bare(acs: &AlmostContactStructure) -> AlmostContactStructure {
    AlmostContactStructure::new(acs.algebroid(), acs.f().clone(), acs.xi().clone(), acs.eta().clone()).unwrap()
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Signed permutations of `0..n`.
fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for k in 0..n {
        let mut next = Vec::new();
        for (p, s) in &out {
            for pos in 0..=k {
                let mut q: Vec<usize> = p.clone();
                q.insert(pos, k);
                let sign = if (k - pos) % 2 == 0 { *s } else { -*s };
                next.push((q, sign));
            }
        }
        out = next;
    }
    out
}

/// `v^a = ε^{a b1 c1 … bm cm} Ω_{b1 c1} ⋯ Ω_{bm cm}`, which spans `ker Ω` when `Ω` has rank `2m`.
fn epsilon_kernel(omega: &DMatrix<f64>) -> DVector<f64> {
    let n = omega.nrows();
    let mut v = DVector::zeros(n);
    for (p, s) in permutations(n) {
        let term: f64 = (0..n / 2).map(|k| omega[(p[2 * k + 1], p[2 * k + 2])]).product();
        v[p[0]] += s * term;
    }
    v
}

#[test]
fn heisenberg_is_almost_contact_with_rank_two() {
    let r = check_almost_contact(&fixtures::heisenberg(), &grid3());
    assert!(r.passed(), "{:?}", r);
    assert!(r.holds("rank_kernel") && r.holds("rank_image"));
    for name in ["f_xi", "f_cubed", "eta_f", "eta_is_g_xi", "f_orthogonal", "f_skew"] {
        assert!(r.holds(name), "{}", name);
    }
}

#[test]
fn rank_one_structure_passes() {
    let g = SampleGrid::halton(ChartBox::cube(1, 1.0), 20, 2).unwrap();
    let acs = fixtures::tr1_structure();
    assert_eq!(acs.m(), 0);
    assert!(check_almost_contact(&acs, &g).passed());
    let c = classify(&acs, &g, Convention::Plain).unwrap();
    assert!(c.flags.almost_contact);
    for (name, v) in c.flags.entries().iter().skip(2) {
        assert!(!v, "{}", name);
    }
    assert!(!contact_test(acs.algebroid(), acs.eta(), &g, Convention::Plain).unwrap().is_contact());
}

#[test]
fn perturbed_f_fails_at_perturbation_scale() {
    let acs = fixtures::heisenberg();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scale = 1e-3;
    let noise = TensorField::endomorphism(3, |_, _| Expr::constant(scale * uniform(&mut rng)));
    let bumped = acs.with_f(acs.f().add(&noise).unwrap()).unwrap();
    let r = check_almost_contact(&bumped, &grid3());
    assert!(!r.passed());
    let v = r.get("f_squared").unwrap().value;
    assert!(!r.holds("f_squared") && v < 10.0 * scale && v > scale / 10.0, "{}", v);
}

#[test]
fn compatible_metric_from_euclidean_seed() {
    let g = grid3();
    let acs = bare(&fixtures::heisenberg());
    let metric = compatible_metric(&acs, &BundleMetric::euclidean(3)).unwrap();
    let acs = acs.with_metric(metric).unwrap();
    let r = check_almost_contact(&acs, &g.clone().with_tolerances(1e-10, 1e-9));
    assert!(r.passed(), "{:?}", r);
    let seeded = compatible_metric(&fixtures::heisenberg(), fixtures::heisenberg().metric().unwrap()).unwrap();
    let r = check_almost_contact(&bare(&fixtures::heisenberg()).with_metric(seeded).unwrap(), &g);
    assert!(r.holds("compatibility"));
}

#[test]
fn fundamental_form_examples() {
    let acs = fixtures::heisenberg();
    let omega = acs.fundamental_form().unwrap();
    let (a, b) = (sec(&["0", "1", "0"]), sec(&["1", "0", "y"]));
    for p in grid3().points() {
        let v = omega.evaluate_on(&[&a, &b]).unwrap().eval(p).unwrap().scalar();
        assert!((v + 1.0).abs() < 1e-12);
        let xi_row = acs.algebroid().interior_product(acs.xi(), &omega).unwrap();
        assert!(max_at(&xi_row, p) < 1e-12);
        let (fa, fb) = (acs.f().apply(&a).unwrap(), acs.f().apply(&b).unwrap());
        let w = omega.evaluate_on(&[&fa, &fb]).unwrap().eval(p).unwrap().scalar();
        assert!((w + 1.0).abs() < 1e-12);
    }
}

#[test]
fn contact_test_examples() {
    let g = grid3();
    let e = fixtures::tr3();
    let eta = fixtures::heisenberg().eta().clone();
    let t = contact_test(&e, &eta, &g, Convention::Plain).unwrap();
    assert!(t.is_contact(), "{:?}", t.report);
    assert!(t.top.iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!(t.lambda.iter().all(|v| (v - 3.0).abs() < 1e-12));
    let closed = TensorField::dual_frame_form(3, 2);
    assert!(!contact_test(&e, &closed, &g, Convention::Plain).unwrap().is_contact());
}

#[test]
fn reeb_examples() {
    let g = grid3();
    let e = fixtures::tr3();
    let eta = fixtures::heisenberg().eta().clone();
    let r = reeb_section(&e, &eta, &g).unwrap();
    assert!(r.report.passed());
    for v in &r.values {
        assert!((v - DVector::from_row_slice(&[0.0, 0.0, 1.0])).amax() < 1e-10);
    }
    let scaled = reeb_section(&e, &eta.scale_const(2.0), &g).unwrap();
    assert!(scaled.report.holds("reeb_eta") && scaled.report.holds("reeb_kernel"));
    let fi = eta.scale(&ex("1 + x^2", &XYZ));
    assert!(reeb_section(&e, &fi, &g).unwrap().report.passed());
    let broken = TensorField::one_form(vec![ex("0", &XYZ), ex("0", &XYZ), ex("1", &XYZ)]);
    assert!(reeb_section(&e, &broken, &g).is_err());
}

#[test]
fn induced_structure_rank_three() {
    let g = grid3();
    let e = fixtures::tr3();
    let eta = TensorField::dual_frame_form(3, 2);
    let omega = TensorField::form(3, 2, |i| if i == [0, 1] { Expr::one() } else { Expr::zero() });
    let s = induce_from_pair(&e, &eta, &omega, &BundleMetric::euclidean(3), &g).unwrap();
    assert!(s.report(&g).passed());
    for v in &s.values {
        assert!((&v.xi - DVector::from_row_slice(&[0.0, 0.0, 1.0])).amax() < 1e-12);
        let fe1 = v.f.column(0);
        assert!((fe1[1].abs() - 1.0).abs() < 1e-12 && fe1[0].abs() < 1e-12 && fe1[2].abs() < 1e-12);
    }
}

fn induce_random(n: usize, seed: u64) {
    let vars: Vec<String> = (1..=n).map(|i| format!("x{}", i)).collect();
    let e = LieAlgebroid::tangent(vars.clone());
    let v: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = || format!("{:.6}", uniform(&mut rng));
    let eta = TensorField::one_form(
        (0..n).map(|a| ex(&format!("{} + {}*sin({})", if a == n - 1 { "2" } else { "0" }, c(), v[a]), &v)).collect(),
    );
    let omega = TensorField::form(n, 2, |i| {
        let base = if i[1] == i[0] + 1 && i[0] % 2 == 0 { 1.5 } else { 0.0 };
        ex(&format!("{} + {}*{}", base, c(), v[i[1]]), &v)
    });
    let h = BundleMetric::from_upper(n, |a, b| {
        if a == b { ex(&format!("2 + {}", v[a]), &v).sqrt() } else { ex(&c().to_string(), &v) * 0.1 }
    });
    let g = SampleGrid::halton(ChartBox::cube(n, 0.3), 50, seed).unwrap();
    let s = induce_from_pair(&e, &eta, &omega, &h, &g).unwrap();
    let r = s.report(&g.clone().with_tolerances(1e-8, 1e-9));
    assert!(r.passed(), "{:?}", r);
    for (p, k) in g.points().iter().zip(&s.kernel) {
        let w = omega.eval(p).unwrap().matrix();
        let o = epsilon_kernel(&w);
        let cos = (o.dot(k) / (o.norm() * k.norm())).abs();
        assert!(cos > 1.0 - 1e-9, "{}", cos);
    }
}

#[test]
fn induced_structure_random_rank_three_and_five() {
    induce_random(3, 21);
    induce_random(5, 22);
}

#[test]
fn normality_on_fixtures() {
    let g = grid3();
    let n = normality_tensors(&fixtures::heisenberg_half(), Convention::Half).unwrap();
    assert!(n.report(&g).passed());
    let n = normality_tensors(&fixtures::twisted(), Convention::Half).unwrap();
    assert!(!n.report(&g).holds("N1"));
}

#[test]
fn classification_ladder() {
    let g = grid3();
    let c = classify(&fixtures::heisenberg_half(), &g, Convention::Half).unwrap();
    assert!(c.report.passed());
    let f = c.flags;
    assert!(f.contact_riemannian && f.k_contact && f.sasakian && f.normal && !f.kenmotsu);
    let c = classify(&fixtures::kenmotsu(), &g, Convention::Plain).unwrap();
    assert!(c.flags.kenmotsu && !c.flags.k_contact && c.flags.almost_kenmotsu && c.flags.normal);
    let c = classify(&fixtures::twisted(), &g, Convention::Plain).unwrap();
    assert!(c.flags.almost_contact && !c.flags.normal);
    let plain = classify(&fixtures::heisenberg_half(), &g, Convention::Plain).unwrap();
    assert_ne!(plain.flags.contact_riemannian, f.contact_riemannian);
}

#[test]
fn identities_on_fixtures() {
    let g = grid3();
    for (acs, conv) in [
        (fixtures::heisenberg_half(), Convention::Half),
        (fixtures::heisenberg(), Convention::Plain),
        (fixtures::kenmotsu(), Convention::Plain),
        (fixtures::twisted(), Convention::Plain),
    ] {
        let c = classify(&acs, &g, conv).unwrap();
        let r = check_identities(&acs, &g, conv, &c.flags).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        assert!(r.holds("master_formula"));
    }
    let acs = fixtures::heisenberg_half();
    let c = classify(&acs, &g, Convention::Half).unwrap();
    let r = check_identities(&acs, &g, Convention::Half, &c.flags).unwrap();
    for name in ["contact_N2", "contact_N4", "N3_traces", "K_contact_nabla_eta", "K_contact_coclosed"] {
        let ch = r.get(name).unwrap();
        assert!(ch.passed && !ch.is_skipped() && !ch.informational, "{}", name);
    }
    let k = fixtures::kenmotsu();
    let c = classify(&k, &g, Convention::Plain).unwrap();
    let r = check_identities(&k, &g, Convention::Plain, &c.flags).unwrap();
    assert!(r.holds("kenmotsu_lie_xi_g") && !r.get("kenmotsu_lie_xi_g").unwrap().is_skipped());
}

#[test]
fn lie_derivative_identities_on_contact_fixture() {
    let acs = fixtures::heisenberg();
    let e = acs.algebroid();
    let deta = e.exterior_derivative(acs.eta()).unwrap();
    let (a, b) = (sec(&["x", "1", "y*z"]), sec(&["cos(z)", "x^2", "1"]));
    let (fa, fb) = (acs.f().apply(&a).unwrap(), acs.f().apply(&b).unwrap());
    let la = e.lie_derivative(&fa, acs.eta()).unwrap().evaluate_on(&[&b]).unwrap();
    let lb = e.lie_derivative(&fb, acs.eta()).unwrap().evaluate_on(&[&a]).unwrap();
    for p in grid3().points() {
        assert!(max_at(&e.lie_derivative(acs.xi(), acs.eta()).unwrap(), p) < 1e-12);
        assert!(max_at(&e.lie_derivative(acs.xi(), &deta).unwrap(), p) < 1e-12);
        assert!(common::diff_at(&la, &lb, p) < 1e-12);
    }
}

#[test]
fn morphism_examples() {
    let g = grid3();
    let e = fixtures::tr3();
    let eta = fixtures::heisenberg().eta().clone();
    let id: Vec<Vec<Expr>> = (0..3).map(|i| (0..3).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect()).collect();
    let m = contact_morphism_check(&e, &eta, &e, &eta, &id, &g).unwrap();
    assert!(m.is_contact && m.strict && m.factor.iter().all(|f| (f - 1.0).abs() < 1e-12));
    let scaled = eta.scale(&ex("1 + x^2", &XYZ));
    let m = contact_morphism_check(&e, &eta, &e, &scaled, &id, &g).unwrap();
    assert!(m.is_contact && !m.strict);
    for (p, f) in g.points().iter().zip(&m.factor) {
        assert!((f - (1.0 + p[0] * p[0])).abs() < 1e-12);
    }
    let collapse: Vec<Vec<Expr>> = [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 1.0]]
        .iter()
        .map(|r| r.iter().map(|v| Expr::constant(*v)).collect())
        .collect();
    let m = contact_morphism_check(&e, &eta, &e, &eta, &collapse, &g).unwrap();
    assert!(!m.is_contact);
    assert!(!m.report.holds("pullback_collinear") && !m.report.holds("kernel_inclusion"));
}

#[test]
fn volume_identity() {
    let g = grid3();
    let r = volume_identity_check(&fixtures::heisenberg(), &g, Convention::Plain).unwrap();
    assert!(r.passed(), "{:?}", r);
    let r = volume_identity_check(&fixtures::heisenberg_half(), &g, Convention::Half).unwrap();
    assert!(r.passed(), "{:?}", r);
    let ratios = volume_ratios(&fixtures::heisenberg_half(), &g).unwrap();
    assert!(ratios.iter().all(|r| (r.abs() - 2.0).abs() < 1e-8));
}

#[test]
fn fe_basis_is_orthonormal_and_adapted() {
    let acs = fixtures::heisenberg();
    for p in grid3().points() {
        let v = acs.value_at(p).unwrap();
        let g = v.g.clone().unwrap();
        let basis = fe_basis_values(&v.f, &v.xi, &g).unwrap();
        let u = DMatrix::from_columns(&basis);
        assert!((u.transpose() * &g * &u - DMatrix::identity(3, 3)).amax() < 1e-9);
        assert!((&v.f * &basis[0] - &basis[1]).amax() < 1e-12);
        assert!(v.eta.dot(&basis[0]).abs() < 1e-9 && v.eta.dot(&basis[1]).abs() < 1e-9);
    }
}

#[test]
fn renamed_structure_keeps_values() {
    let acs = fixtures::heisenberg();
    let r = acs.renamed(names(&["u", "v", "w"])).unwrap();
    let p = [0.2, 0.5, -0.3];
    let (a, b) = (acs.value_at(&p).unwrap(), r.value_at(&p).unwrap());
    assert_eq!(a.f, b.f);
    assert_eq!(a.g, b.g);
    assert_eq!(r.algebroid().variables(), names(&["u", "v", "w"]).as_slice());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn master_formula_holds_for_perturbed_metrics(c in proptest::collection::vec(-0.3f64..0.3, 6), p in point(3)) {
        let seed = BundleMetric::from_upper(3, |a, b| {
            let k = [[0, 1, 2], [1, 3, 4], [2, 4, 5]][a][b];
            let base = if a == b { 1.0 } else { 0.0 };
            Expr::constant(base + c[k]) + Expr::var(0, "x").sin() * (0.1 * (a + b) as f64)
        });
        let acs = bare(&fixtures::twisted());
        let metric = compatible_metric(&acs, &seed).unwrap();
        let acs = acs.with_metric(metric).unwrap();
        let grid = SampleGrid::new(ChartBox::cube(3, 1.5), vec![p]).unwrap();
        let base = check_almost_contact(&acs, &grid);
        prop_assert!(base.passed());
        let flags = classify(&acs, &grid, Convention::Plain).unwrap().flags;
        let r = check_identities(&acs, &grid, Convention::Plain, &flags).unwrap();
        prop_assert!(r.holds("master_formula"), "{:?}", r.get("master_formula"));
    }
}
