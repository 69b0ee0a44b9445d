//! Almost contact structures `(F, ξ, η, g)` on an odd-rank Lie algebroid and
//! the ladder contact Riemannian → K-contact → Sasakian, plus Kenmotsu.
//!
//! Every flag is decided from pointwise residuals on a [`SampleGrid`]; a claim
//! that holds "everywhere" holds at every grid point and nowhere else.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::algebroid::{Convention, LieAlgebroid};
use crate::expr::Expr;
use crate::grid::{Noise, SampleGrid};
use crate::linalg;
use crate::report::{Check, Report, Tracker};
use crate::riemann::{codifferential_at, BundleMetric, Connection, Derivable};
use crate::tensor::{wedge, TensorField, Variance};
use crate::{Error, Result};

/// Largest rank for which the permutation formula for `λ` is evaluated.
pub const LAMBDA_MAX_RANK: usize = 7;

/// Random section triples per point in the master formula check.
pub const MASTER_TRIPLES: usize = 20;

#[derive(Debug, Clone)]
pub struct AlmostContactStructure {
    algebroid: LieAlgebroid,
    f: TensorField,
    xi: TensorField,
    eta: TensorField,
    metric: Option<BundleMetric>,
}

impl AlmostContactStructure {
    pub fn new(algebroid: &LieAlgebroid, f: TensorField, xi: TensorField, eta: TensorField) -> Result<Self> {
        let m = algebroid.rank();
        if m.is_multiple_of(2) {
            return Err(Error::EvenRank(m));
        }
        f.expect(Variance::ENDOMORPHISM)?;
        if f.rank() != m {
            return Err(Error::RankMismatch { expected: m, found: f.rank() });
        }
        xi.expect_section(m)?;
        eta.expect(Variance::form(1))?;
        if eta.rank() != m {
            return Err(Error::RankMismatch { expected: m, found: eta.rank() });
        }
        Ok(AlmostContactStructure { algebroid: algebroid.clone(), f, xi, eta, metric: None })
    }

    /// From `F^c_b = f[c][b]`, `ξ^a` and `η_a`.
    pub fn from_components(algebroid: &LieAlgebroid, f: &[Vec<Expr>], xi: Vec<Expr>, eta: Vec<Expr>) -> Result<Self> {
        AlmostContactStructure::new(algebroid, TensorField::from_matrix(f)?, TensorField::section(xi), TensorField::one_form(eta))
    }

    pub fn with_metric(mut self, metric: BundleMetric) -> Result<Self> {
        if metric.rank() != self.rank() {
            return Err(Error::RankMismatch { expected: self.rank(), found: metric.rank() });
        }
        self.metric = Some(metric);
        Ok(self)
    }

    /// Same `ξ`, `η` and metric with a different endomorphism.
    pub fn with_f(&self, f: TensorField) -> Result<Self> {
        let mut out = AlmostContactStructure::new(&self.algebroid, f, self.xi.clone(), self.eta.clone())?;
        out.metric = self.metric.clone();
        Ok(out)
    }

    /// The same structure over renamed chart variables.
    pub fn renamed(&self, variables: Vec<String>) -> Result<Self> {
        let algebroid = self.algebroid.renamed(variables)?;
        let names = crate::algebroid::arc_names(algebroid.variables());
        let map = |e: &Expr| crate::algebroid::relabel(e, 0, &names);
        let metric = match &self.metric {
            Some(g) => Some(BundleMetric::new(g.matrix().iter().map(|r| r.iter().map(map).collect()).collect())?),
            None => None,
        };
        Ok(AlmostContactStructure { algebroid, f: self.f.map(map), xi: self.xi.map(map), eta: self.eta.map(map), metric })
    }

    pub fn algebroid(&self) -> &LieAlgebroid {
        &self.algebroid
    }

    pub fn f(&self) -> &TensorField {
        &self.f
    }

    pub fn xi(&self) -> &TensorField {
        &self.xi
    }

    pub fn eta(&self) -> &TensorField {
        &self.eta
    }

    pub fn metric(&self) -> Option<&BundleMetric> {
        self.metric.as_ref()
    }

    pub fn rank(&self) -> usize {
        self.algebroid.rank()
    }

    /// `m` with rank `2m + 1`.
    pub fn m(&self) -> usize {
        self.rank() / 2
    }

    fn require_metric(&self) -> Result<&BundleMetric> {
        self.metric.as_ref().ok_or_else(|| Error::Invalid("structure has no metric".into()))
    }

    pub fn value_at(&self, p: &[f64]) -> Result<AlmostContactValue> {
        let ev = |t: &TensorField| t.eval(p).map_err(|e| Error::eval(p, e));
        Ok(AlmostContactValue {
            f: ev(&self.f)?.matrix(),
            xi: ev(&self.xi)?.vector(),
            eta: ev(&self.eta)?.vector(),
            g: match &self.metric {
                Some(g) => Some(g.value_at(p)?),
                None => None,
            },
        })
    }

    /// `Ω(s1, s2) = g(s1, F s2)`, built from its entries with `a < b`.
    pub fn fundamental_form(&self) -> Result<TensorField> {
        let g = self.require_metric()?;
        let m = self.rank();
        Ok(TensorField::form(m, 2, |i| {
            Expr::sum((0..m).map(|c| g.entry(i[0], c) * self.f.matrix_entry(c, i[1])))
        }))
    }
}

/// Numeric `(F, ξ, η, g)` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmostContactValue {
    /// `f[(c, b)] = F^c_b`.
    pub f: DMatrix<f64>,
    pub xi: DVector<f64>,
    pub eta: DVector<f64>,
    pub g: Option<DMatrix<f64>>,
}

impl AlmostContactValue {
    fn n(&self) -> usize {
        self.xi.len()
    }

    /// `η ⊗ ξ` as the matrix of `s ↦ η(s) ξ`.
    fn eta_xi(&self) -> DMatrix<f64> {
        &self.xi * self.eta.transpose()
    }

    /// `F² + I − η⊗ξ`.
    pub fn structure_residual(&self) -> f64 {
        let n = self.n();
        linalg::max_abs(&(&self.f * &self.f + DMatrix::identity(n, n) - self.eta_xi()))
    }

    /// `η(ξ) − 1`.
    pub fn pairing_residual(&self) -> f64 {
        (self.eta.dot(&self.xi) - 1.0).abs()
    }

    /// `g(Fs1, Fs2) − g(s1, s2) + η(s1)η(s2)`.
    pub fn compatibility_residual(&self) -> Option<f64> {
        let g = self.g.as_ref()?;
        Some(linalg::max_abs(&(self.f.transpose() * g * &self.f - g + &self.eta * self.eta.transpose())))
    }
}

const METRIC_CHECKS: [&str; 5] = ["compatibility", "metric_positive_definite", "eta_is_g_xi", "f_orthogonal", "f_skew"];

fn value_report(title: &str, points: &[Vec<f64>], values: &[core::result::Result<AlmostContactValue, String>], grid: &SampleGrid) -> Report {
    let tol = grid.tol_eq;
    let mut t: Vec<Tracker> = ["f_squared", "eta_xi", "f_xi", "f_cubed", "eta_f", "rank_kernel"]
        .iter()
        .map(|n| Tracker::vanishing(n, tol))
        .collect();
    t.push(Tracker::nonvanishing("rank_image", grid.tol_nonzero));
    let with_metric = values.iter().any(|v| v.as_ref().is_ok_and(|v| v.g.is_some()));
    let mut tm: Vec<Tracker> = Vec::new();
    if with_metric {
        tm.push(Tracker::vanishing(METRIC_CHECKS[0], tol));
        tm.push(Tracker::nonvanishing(METRIC_CHECKS[1], grid.tol_nonzero));
        for n in &METRIC_CHECKS[2..] {
            tm.push(Tracker::vanishing(n, tol));
        }
    }
    for (p, v) in points.iter().zip(values) {
        let v = match v {
            Ok(v) => v,
            Err(e) => {
                t.iter_mut().chain(tm.iter_mut()).for_each(|t| t.fail(p, e.clone()));
                continue;
            }
        };
        let n = v.n();
        let f = &v.f;
        t[0].record(p, v.structure_residual());
        t[1].record(p, v.pairing_residual());
        t[2].record(p, linalg::max_abs_vec(&(f * &v.xi)));
        t[3].record(p, linalg::max_abs(&(f * f * f + f)));
        t[4].record(p, linalg::max_abs(&(v.eta.transpose() * f)));
        let s = linalg::singular_values(f);
        t[5].record(p, s[n - 1]);
        t[6].record(p, if n > 1 { s[n - 2] } else { f64::INFINITY });
        if !with_metric {
            continue;
        }
        let Some(g) = v.g.as_ref() else {
            tm.iter_mut().for_each(|t| t.fail(p, "metric missing"));
            continue;
        };
        tm[0].record(p, v.compatibility_residual().unwrap_or(f64::INFINITY));
        tm[1].record(p, linalg::min_eigenvalue(g).max(0.0));
        tm[2].record(p, linalg::max_abs_vec(&(g * &v.xi - &v.eta)));
        let mut orth: f64 = 0.0;
        for sign in [1.0, -1.0] {
            let a = f * sign + v.eta_xi();
            orth = orth.max(linalg::max_abs(&(a.transpose() * g * &a - g)));
        }
        tm[3].record(p, orth);
        tm[4].record(p, linalg::max_abs(&(g * f + f.transpose() * g)));
    }
    let mut report = Report::new(title, points.len());
    for t in t.into_iter().chain(tm) {
        report.push(t.finish());
    }
    report
}

/// Defining identities of an almost contact structure, the derived identities
/// `Fξ = 0`, `F³ + F = 0`, `η∘F = 0`, numeric rank `F = 2m`, and the metric
/// identities when a metric is attached.
pub fn check_almost_contact(acs: &AlmostContactStructure, grid: &SampleGrid) -> Report {
    let points = grid.points().to_vec();
    let values: Vec<_> = points.iter().map(|p| acs.value_at(p).map_err(|e| e.to_string())).collect();
    value_report("almost_contact", &points, &values, grid)
}

fn expr_matrix(t: &TensorField) -> Vec<Vec<Expr>> {
    let m = t.rank();
    (0..m).map(|c| (0..m).map(|b| t.matrix_entry(c, b).clone()).collect()).collect()
}

fn mat_mul(a: &[Vec<Expr>], b: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| Expr::sum((0..n).map(|k| &a[i][k] * &b[k][j]))).collect())
        .collect()
}

fn transpose(a: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| a[j][i].clone()).collect()).collect()
}

/// Symbolic metric `g = ½[g*(F·,F·) + g* + η⊗η]` with `g* = seed(F²·,F²·) + η⊗η`.
pub fn compatible_metric(acs: &AlmostContactStructure, seed: &BundleMetric) -> Result<BundleMetric> {
    let n = acs.rank();
    if seed.rank() != n {
        return Err(Error::RankMismatch { expected: n, found: seed.rank() });
    }
    let f = expr_matrix(acs.f());
    let f2 = mat_mul(&f, &f);
    let eta = acs.eta().as_vector();
    let ee = |a: usize, b: usize| &eta[a] * &eta[b];
    let s = seed.matrix();
    let inner = mat_mul(&mat_mul(&transpose(&f2), s), &f2);
    let gstar: Vec<Vec<Expr>> = (0..n).map(|a| (0..n).map(|b| &inner[a][b] + ee(a, b)).collect()).collect();
    let pulled = mat_mul(&mat_mul(&transpose(&f), &gstar), &f);
    Ok(BundleMetric::from_upper(n, |a, b| Expr::sum([pulled[a][b].clone(), gstar[a][b].clone(), ee(a, b)]) * 0.5))
}

/// [`compatible_metric`] after checking that `seed` is positive definite on the grid.
pub fn build_compatible_metric(acs: &AlmostContactStructure, seed: &BundleMetric, grid: &SampleGrid) -> Result<BundleMetric> {
    seed.require_positive_definite(grid)?;
    compatible_metric(acs, seed)
}

/// All permutations of `0..n` with their signs.
pub(crate) fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn go(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        if rest.is_empty() {
            out.push((prefix.clone(), sign));
            return;
        }
        for k in 0..rest.len() {
            let v = rest.remove(k);
            prefix.push(v);
            go(prefix, rest, if k % 2 == 0 { sign } else { -sign }, out);
            prefix.pop();
            rest.insert(k, v);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..n).collect(), 1.0, &mut out);
    out
}

/// Outcome of [`contact_test`].
#[derive(Debug, Clone)]
pub struct ContactTest {
    pub report: Report,
    /// `(η∧(d η)^m)(e_1, …, e_{2m+1})` with `d` in the requested convention.
    pub top: Vec<f64>,
    /// `λ` from the permutation formula; empty above [`LAMBDA_MAX_RANK`].
    pub lambda: Vec<f64>,
    /// Expected `top / λ`: `c^m / ((2m+1) m!)` with `c` the 1-form factor of the convention.
    pub ratio: f64,
}

impl ContactTest {
    pub fn is_contact(&self) -> bool {
        self.report.passed()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Top coefficient of `η∧ω^k` as a symbolic expression.
fn top_coefficient(eta: &TensorField, omega: &TensorField, k: usize) -> Result<Expr> {
    let n = eta.rank();
    let mut acc = eta.clone();
    for _ in 0..k {
        acc = wedge(&acc, omega)?;
    }
    if acc.degree() != n {
        return Err(Error::Variance(format!("η∧ω^{} has degree {}, rank is {}", k, acc.degree(), n)));
    }
    let top: Vec<usize> = (0..n).collect();
    Ok(acc.component(&top).clone())
}

/// Nonvanishing of `η∧(dη)^m`, compared with the permutation formula for `λ`.
pub fn contact_test(algebroid: &LieAlgebroid, eta: &TensorField, grid: &SampleGrid, convention: Convention) -> Result<ContactTest> {
    let n = algebroid.rank();
    if n.is_multiple_of(2) {
        return Err(Error::EvenRank(n));
    }
    eta.expect_form(n)?;
    let m = n / 2;
    let tol = grid.tol_eq;
    let mut report = Report::new("contact", grid.len());
    report.convention = Some(convention.name().to_string());
    let deta = algebroid.exterior_derivative_with(eta, convention)?;
    let top_expr = top_coefficient(eta, &deta, m)?;
    let c = convention.factor(1);
    let ratio = libm::pow(c, m as f64) / ((2 * m + 1) as f64 * factorial(m));

    // Independent pieces for λ: ρ_a(η_b) and structure functions.
    let with_lambda = n <= LAMBDA_MAX_RANK;
    let perms = if with_lambda { permutations(n) } else { Vec::new() };
    let drho: Vec<Expr> = (0..n * n)
        .map(|k| algebroid.anchor_derivative(k / n, &eta.as_vector()[k % n]))
        .collect();

    let mut nz = Tracker::nonvanishing("contact_form", grid.tol_nonzero);
    let mut nl = Tracker::nonvanishing("lambda", grid.tol_nonzero);
    let mut prop = Tracker::vanishing("lambda_proportionality", tol);
    let mut top = Vec::with_capacity(grid.len());
    let mut lambda = Vec::new();
    for p in grid.points() {
        let w = match top_expr.eval(p) {
            Ok(w) => w,
            Err(e) => {
                let e = Error::eval(p, e).to_string();
                nz.fail(p, e.clone());
                nl.fail(p, e.clone());
                prop.fail(p, e);
                top.push(f64::NAN);
                continue;
            }
        };
        top.push(w);
        nz.record(p, w);
        if !with_lambda {
            continue;
        }
        let l = match lambda_at(algebroid, eta, &drho, &perms, p) {
            Ok(l) => l,
            Err(e) => {
                nl.fail(p, e.to_string());
                prop.fail(p, e.to_string());
                lambda.push(f64::NAN);
                continue;
            }
        };
        lambda.push(l);
        nl.record(p, l);
        prop.record(p, (w - ratio * l) / w.abs().max(1.0));
    }
    if m == 0 {
        let mut t = Tracker::vanishing("m_at_least_one", 0.5);
        if let Some(p) = grid.points().first() {
            t.fail(p, "rank 1: the contact condition is taken to require m ≥ 1");
        }
        report.push(t.finish());
    }
    report.push(nz.finish());
    if with_lambda {
        report.push(nl.finish());
        report.push(prop.finish());
    } else {
        report.push(Check::skipped("lambda", format!("permutation formula limited to rank ≤ {}", LAMBDA_MAX_RANK)));
    }
    Ok(ContactTest { report, top, lambda, ratio })
}

/// `λ = (2m+1) Σ_σ ε(σ) η_{σ1} Ω_{σ2σ3} ⋯` with `Ω_ab = ½(ρ_a η_b − ρ_b η_a − C^c_ab η_c)`.
fn lambda_at(algebroid: &LieAlgebroid, eta: &TensorField, drho: &[Expr], perms: &[(Vec<usize>, f64)], p: &[f64]) -> Result<f64> {
    let n = algebroid.rank();
    let ev = |e: &Expr| e.eval(p).map_err(|err| Error::eval(p, err));
    let etav: Vec<f64> = eta.as_vector().iter().map(ev).collect::<Result<_>>()?;
    let mut omega = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let mut v = ev(&drho[a * n + b])? - ev(&drho[b * n + a])?;
            for c in 0..n {
                v -= ev(algebroid.structure(c, a, b))? * etav[c];
            }
            omega[a * n + b] = 0.5 * v;
        }
    }
    let mut sum = 0.0;
    for (s, sign) in perms {
        let mut t = sign * etav[s[0]];
        let mut k = 1;
        while k + 1 < n && t != 0.0 {
            t *= omega[s[k] * n + s[k + 1]];
            k += 2;
        }
        sum += t;
    }
    Ok((n as f64) * sum)
}

/// Per-point Reeb section and its defining residuals.
#[derive(Debug, Clone)]
pub struct ReebSection {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<DVector<f64>>,
    pub report: Report,
}

/// Solves `η(ξ) = 1`, `ι_ξ dη = 0` at each grid point.
pub fn reeb_section(algebroid: &LieAlgebroid, eta: &TensorField, grid: &SampleGrid) -> Result<ReebSection> {
    let n = algebroid.rank();
    if n.is_multiple_of(2) {
        return Err(Error::EvenRank(n));
    }
    let deta = algebroid.exterior_derivative(eta)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut t_eta = Tracker::vanishing("reeb_eta", grid.tol_eq);
    let mut t_ker = Tracker::vanishing("reeb_kernel", grid.tol_eq);
    for p in grid.points() {
        let e = eta.eval(p).map_err(|err| Error::eval(p, err))?.vector();
        let d = deta.eval(p).map_err(|err| Error::eval(p, err))?.matrix();
        let mut a = DMatrix::zeros(n + 1, n);
        a.row_mut(0).copy_from(&e.transpose());
        for r in 0..n {
            for c in 0..n {
                a[(r + 1, c)] = d[(c, r)];
            }
        }
        let mut b = DVector::zeros(n + 1);
        b[0] = 1.0;
        let svd = a.clone().svd(true, true);
        let smin = svd.singular_values.iter().fold(f64::INFINITY, |x, y| x.min(*y));
        if !(smin > grid.tol_nonzero) {
            return Err(Error::Singular {
                point: p.clone(),
                reason: format!("Reeb system is rank deficient (smallest singular value {:e})", smin),
            });
        }
        let xi = svd.solve(&b, 1e-14).map_err(|r| Error::Singular { point: p.clone(), reason: r.to_string() })?;
        t_eta.record(p, e.dot(&xi) - 1.0);
        t_ker.record(p, linalg::max_abs_vec(&(d.transpose() * &xi)));
        values.push(xi);
    }
    let points = grid.points().to_vec();
    let mut lip = Tracker::vanishing("reeb_lipschitz_estimate", f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let nearest = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, q)| (j, p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(core::cmp::Ordering::Equal));
        if let Some((j, d2)) = nearest {
            if d2 > 0.0 {
                lip.record(p, (&values[i] - &values[j]).norm() / libm::sqrt(d2));
            }
        }
    }
    let mut report = Report::new("reeb", grid.len());
    report.push(t_eta.finish());
    report.push(t_ker.finish());
    report.push(lip.finish().informational().with_note("max |ξ(p) − ξ(q)| / |p − q| over nearest neighbours"));
    Ok(ReebSection { points, values, report })
}

/// Pointwise almost contact data induced by a pair `(η, Ω)` and a metric `h`.
#[derive(Debug, Clone)]
pub struct InducedStructure {
    pub points: Vec<Vec<f64>>,
    /// `(F, ξ, η*, h)` with `η* = h(·, ξ)`.
    pub values: Vec<AlmostContactValue>,
    /// Unnormalized kernel direction of `Ω` (unit Euclidean norm).
    pub kernel: Vec<DVector<f64>>,
}

impl InducedStructure {
    pub fn report(&self, grid: &SampleGrid) -> Report {
        let values: Vec<_> = self.values.iter().cloned().map(Ok).collect();
        value_report("induced", &self.points, &values, grid)
    }
}

/// Builds `(F, ξ, η*)` from a 1-form `η` and a 2-form `Ω` with `η∧Ω^m ≠ 0`.
///
/// `ξ` spans the kernel of `Ω`, normalized by `h` and oriented so that `η(ξ) > 0`;
/// on the `h`-orthogonal complement `F` is the orthogonal factor of the polar
/// decomposition of the `h`-dual `A` of `Ω`.
pub fn induce_from_pair(
    algebroid: &LieAlgebroid,
    eta: &TensorField,
    omega: &TensorField,
    h: &BundleMetric,
    grid: &SampleGrid,
) -> Result<InducedStructure> {
    let n = algebroid.rank();
    if n.is_multiple_of(2) {
        return Err(Error::EvenRank(n));
    }
    eta.expect_form(n)?;
    omega.expect_form(n)?;
    if omega.degree() != 2 {
        return Err(Error::Variance("Ω must be a 2-form".into()));
    }
    let m = n / 2;
    let top = top_coefficient(eta, omega, m)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut kernel = Vec::with_capacity(grid.len());
    for p in grid.points() {
        let t = top.eval(p).map_err(|e| Error::eval(p, e))?;
        if !(t.abs() > grid.tol_nonzero) {
            return Err(Error::Degenerate(format!("η∧Ω^m vanishes at {:?}", p)));
        }
        let w = omega.eval(p).map_err(|e| Error::eval(p, e))?.matrix();
        let e = eta.eval(p).map_err(|err| Error::eval(p, err))?.vector();
        let hm = h.value_at(p)?;
        let (ker, s) = linalg::nullspace(&w, grid.tol_eq * s_scale(&w));
        if ker.len() != 1 || (n > 1 && !(s[n - 2] > grid.tol_nonzero)) {
            return Err(Error::Degenerate(format!(
                "kernel of Ω at {:?} has dimension {} (singular values {:?})",
                p,
                ker.len(),
                s
            )));
        }
        let mut sk = ker[0].clone();
        if e.dot(&sk) < 0.0 {
            sk = -sk;
        }
        let hn = linalg::dot_g(&hm, &sk, &sk);
        if !(hn > 0.0) {
            return Err(Error::NotPositiveDefinite { point: p.clone(), eigenvalue: hn });
        }
        let xi = &sk / libm::sqrt(hn);
        let eta_star = &hm * &xi;
        // h-orthonormal frame of ⟨ξ⟩^⊥.
        let mut span = vec![xi.clone()];
        let mut q: Vec<DVector<f64>> = Vec::with_capacity(2 * m);
        for k in 0..n {
            if q.len() == 2 * m {
                break;
            }
            let mut v = DVector::zeros(n);
            v[k] = 1.0;
            for _ in 0..2 {
                for u in &span {
                    let c = linalg::dot_g(&hm, u, &v);
                    v -= u * c;
                }
            }
            let nv = linalg::dot_g(&hm, &v, &v);
            if nv > 1e-20 {
                let u = v / libm::sqrt(nv);
                span.push(u.clone());
                q.push(u);
            }
        }
        if q.len() != 2 * m {
            return Err(Error::Degenerate(format!("no orthonormal complement of ξ at {:?}", p)));
        }
        let qm = DMatrix::from_columns(&q);
        let wq = qm.transpose() * &w * &qm;
        let a = -wq;
        let ata = a.transpose() * &a;
        let root = linalg::inv_sqrt_spd(&ata).ok_or_else(|| Error::Singular {
            point: p.clone(),
            reason: "Ω is degenerate on the complement of its kernel".into(),
        })?;
        let fq = &a * root;
        let f = &qm * fq * qm.transpose() * &hm;
        kernel.push(sk);
        values.push(AlmostContactValue { f, xi, eta: eta_star, g: Some(hm) });
    }
    Ok(InducedStructure { points: grid.points().to_vec(), values, kernel })
}

fn s_scale(w: &DMatrix<f64>) -> f64 {
    linalg::max_abs(w).max(1.0)
}

/// Symbolic `N^(1)`, `N^(2)`, `N^(3)`, `N^(4)`.
#[derive(Debug, Clone)]
pub struct NormalityTensors {
    /// `N_F + 2 d η ⊗ ξ`, a vector-valued 2-form.
    pub n1: TensorField,
    /// `(ℒ_{Fs1}η)(s2) − (ℒ_{Fs2}η)(s1)`.
    pub n2: TensorField,
    /// `½ ℒ_ξ F`.
    pub n3: TensorField,
    /// `ℒ_ξ η`.
    pub n4: TensorField,
}

impl NormalityTensors {
    pub fn report(&self, grid: &SampleGrid) -> Report {
        let mut r = Report::new("normality", grid.len());
        for (name, t) in [("N1", &self.n1), ("N2", &self.n2), ("N3", &self.n3), ("N4", &self.n4)] {
            r.push(crate::algebroid::field_check(grid, name, t, grid.tol_eq));
        }
        r
    }
}

fn n1_field(alg: &LieAlgebroid, nf: &TensorField, deta: &TensorField, xi: &TensorField, k: f64) -> TensorField {
    TensorField::vector_valued_form(alg.rank(), 1, 2, |i| {
        nf.component(i) + deta.component(&i[1..]) * &xi.as_vector()[i[0]] * (2.0 * k)
    })
}

fn n2_field(acs: &AlmostContactStructure) -> Result<TensorField> {
    let alg = acs.algebroid();
    let m = acs.rank();
    let lie: Vec<TensorField> = (0..m)
        .map(|a| alg.lie_derivative(&acs.f().apply(&TensorField::frame_section(m, a))?, acs.eta()))
        .collect::<Result<_>>()?;
    Ok(TensorField::form(m, 2, |i| lie[i[0]].as_vector()[i[1]].clone() - &lie[i[1]].as_vector()[i[0]]))
}

pub fn normality_tensors(acs: &AlmostContactStructure, convention: Convention) -> Result<NormalityTensors> {
    let alg = acs.algebroid();
    let nf = alg.nijenhuis(acs.f())?;
    let deta = alg.exterior_derivative(acs.eta())?;
    Ok(NormalityTensors {
        n1: n1_field(alg, &nf, &deta, acs.xi(), convention.factor(1)),
        n2: n2_field(acs)?,
        n3: alg.lie_derivative(acs.xi(), acs.f())?.scale_const(0.5),
        n4: alg.lie_derivative(acs.xi(), acs.eta())?,
    })
}

/// Flags of the classification ladder.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Flags {
    pub almost_contact: bool,
    pub compatible: bool,
    pub contact_riemannian: bool,
    pub normal: bool,
    #[cfg_attr(feature = "serde", serde(rename = "K_contact"))]
    pub k_contact: bool,
    pub sasakian: bool,
    pub almost_kenmotsu: bool,
    pub kenmotsu: bool,
}

impl Flags {
    /// `(name, value)` pairs in ladder order.
    pub fn entries(&self) -> [(&'static str, bool); 8] {
        [
            ("almost_contact", self.almost_contact),
            ("compatible", self.compatible),
            ("contact_riemannian", self.contact_riemannian),
            ("normal", self.normal),
            ("K_contact", self.k_contact),
            ("sasakian", self.sasakian),
            ("almost_kenmotsu", self.almost_kenmotsu),
            ("kenmotsu", self.kenmotsu),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub flags: Flags,
    pub report: Report,
}

/// Symbolic data shared by the classification and the identity checks.
struct Geometry {
    conn: Connection,
    f: Derivable,
    xi: Derivable,
    eta: Derivable,
    omega: TensorField,
    d_eta: TensorField,
    d_omega: TensorField,
    eta_omega: TensorField,
    n_f: TensorField,
    n2: TensorField,
    n3: TensorField,
    n4: TensorField,
    lxi_g: TensorField,
    lxi_deta: TensorField,
}

/// Numeric values at one point; matrices of (1,1)-tensors are `(c, b)`, of
/// 2-forms `(a, b)`.
struct Sample {
    index: usize,
    n: usize,
    f: DMatrix<f64>,
    xi: DVector<f64>,
    eta: DVector<f64>,
    g: DMatrix<f64>,
    omega: DMatrix<f64>,
    d_eta: DMatrix<f64>,
    d_omega: Vec<f64>,
    eta_omega: Vec<f64>,
    n_f: Vec<f64>,
    n2: DMatrix<f64>,
    n3: DMatrix<f64>,
    n4: DVector<f64>,
    lxi_g: DMatrix<f64>,
    lxi_deta: DMatrix<f64>,
    /// `nabla_f[a] = ∇_{e_a} F`.
    nabla_f: Vec<DMatrix<f64>>,
    /// `(c, a) = (∇_{e_a} ξ)^c`.
    nabla_xi: DMatrix<f64>,
    /// `(a, b) = (∇_{e_a} η)_b`.
    nabla_eta: DMatrix<f64>,
    codiff_eta: f64,
}

type Samples = Vec<(Vec<f64>, core::result::Result<Sample, String>)>;

impl Geometry {
    fn new(acs: &AlmostContactStructure) -> Result<Geometry> {
        let g = acs.require_metric()?;
        let alg = acs.algebroid();
        let conn = Connection::levi_civita(alg, g)?;
        let omega = acs.fundamental_form()?;
        let d_eta = alg.exterior_derivative(acs.eta())?;
        let d_omega = alg.exterior_derivative(&omega)?;
        let eta_omega = wedge(acs.eta(), &omega)?;
        let n_f = alg.nijenhuis(acs.f())?;
        let n2 = n2_field(acs)?;
        let n3 = alg.lie_derivative(acs.xi(), acs.f())?.scale_const(0.5);
        let n4 = alg.lie_derivative(acs.xi(), acs.eta())?;
        let lxi_g = alg.lie_derivative(acs.xi(), &g.as_tensor())?;
        let lxi_deta = alg.lie_derivative(acs.xi(), &d_eta)?;
        Ok(Geometry {
            f: conn.prepare(acs.f()),
            xi: conn.prepare(acs.xi()),
            eta: conn.prepare(acs.eta()),
            conn,
            omega,
            d_eta,
            d_omega,
            eta_omega,
            n_f,
            n2,
            n3,
            n4,
            lxi_g,
            lxi_deta,
        })
    }

    fn sample(&self, index: usize, p: &[f64]) -> Result<Sample> {
        let n = self.conn.algebroid().rank();
        let ev = |t: &TensorField| t.eval(p).map_err(|e| Error::eval(p, e));
        let at = self.conn.at(p)?;
        let nf = at.nabla(&self.f)?;
        let nx = at.nabla(&self.xi)?;
        let ne = at.nabla(&self.eta)?;
        let order: Vec<usize> = (0..n).collect();
        Ok(Sample {
            index,
            n,
            f: ev(self.f.field())?.matrix(),
            xi: ev(self.xi.field())?.vector(),
            eta: ev(self.eta.field())?.vector(),
            g: at.g.clone(),
            omega: ev(&self.omega)?.matrix(),
            d_eta: ev(&self.d_eta)?.matrix(),
            d_omega: ev(&self.d_omega)?.data,
            eta_omega: ev(&self.eta_omega)?.data,
            n_f: ev(&self.n_f)?.data,
            n2: ev(&self.n2)?.matrix(),
            n3: ev(&self.n3)?.matrix(),
            n4: ev(&self.n4)?.vector(),
            lxi_g: ev(&self.lxi_g)?.matrix(),
            lxi_deta: ev(&self.lxi_deta)?.matrix(),
            nabla_f: nf.iter().map(|v| v.matrix()).collect(),
            nabla_xi: DMatrix::from_fn(n, n, |c, a| nx[a].data[c]),
            nabla_eta: DMatrix::from_fn(n, n, |a, b| ne[a].data[b]),
            codiff_eta: codifferential_at(&self.conn, &self.eta, p, &order)?.scalar(),
        })
    }

    fn samples(&self, grid: &SampleGrid) -> Samples {
        grid.points()
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), self.sample(i, p).map_err(|e| e.to_string())))
            .collect()
    }
}

impl Sample {
    fn unit(&self, a: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.n);
        v[a] = 1.0;
        v
    }

    /// `∇_s F` as a matrix.
    fn nabla_f_along(&self, s: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (a, na) in self.nabla_f.iter().enumerate() {
            if s[a] != 0.0 {
                out += na * s[a];
            }
        }
        out
    }

    fn form3(&self, data: &[f64], u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    acc += data[(a * n + b) * n + c] * u[a] * v[b] * w[c];
                }
            }
        }
        acc
    }

    /// `N_F^c_ab + k dη_ab ξ^c`: the `N^(1)` with `k = 2 × (1-form factor)`.
    fn n1(&self, k: f64) -> Vec<f64> {
        let n = self.n;
        let mut out = self.n_f.clone();
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    out[(c * n + a) * n + b] += k * self.d_eta[(a, b)] * self.xi[c];
                }
            }
        }
        out
    }

    fn n1_apply(data: &[f64], n: usize, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(n, |c, _| {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += data[(c * n + a) * n + b] * u[a] * v[b];
                }
            }
            acc
        })
    }

    fn contact_residual(&self, convention: Convention) -> f64 {
        linalg::max_abs(&(&self.d_eta * convention.factor(1) - &self.omega))
    }

    fn normal_residual(&self, convention: Convention) -> f64 {
        max_abs_slice(&self.n1(2.0 * convention.factor(1)))
    }

    fn killing_residual(&self) -> f64 {
        linalg::max_abs(&(&self.nabla_xi + &self.f))
    }

    /// `(∇_{e_a}F)e_b − g_ab ξ + η_b e_a`.
    fn sasaki_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for a in 0..self.n {
            let m = &self.nabla_f[a] - &self.xi * self.g.row(a) + self.unit(a) * self.eta.transpose();
            r = r.max(linalg::max_abs(&m));
        }
        r
    }

    /// `(∇_{e_a}F)e_b + η_b F e_a + Ω_ab ξ`.
    fn kenmotsu_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for a in 0..self.n {
            let m = &self.nabla_f[a] + self.f.column(a) * self.eta.transpose() + &self.xi * self.omega.row(a);
            r = r.max(linalg::max_abs(&m));
        }
        r
    }

    fn closed_residual(&self) -> f64 {
        linalg::max_abs(&self.d_eta)
    }

    /// `d Ω − 2 η∧Ω` (plain `d`, determinant wedge).
    fn warped_residual(&self) -> f64 {
        self.d_omega.iter().zip(&self.eta_omega).fold(0.0, |acc, (a, b)| acc.max((a - 2.0 * b).abs()))
    }

    /// Both sides of the master formula on random triples.
    fn master_residual(&self) -> f64 {
        let mut noise = Noise::new(0x6d61_7374_6572 ^ self.index as u64);
        let n1 = self.n1(1.0);
        let mut worst: f64 = 0.0;
        for _ in 0..MASTER_TRIPLES {
            let s1 = DVector::from_vec(noise.vector(self.n));
            let s2 = DVector::from_vec(noise.vector(self.n));
            let s3 = DVector::from_vec(noise.vector(self.n));
            let (fs1, fs2, fs3) = (&self.f * &s1, &self.f * &s2, &self.f * &s3);
            let lhs = 2.0 * linalg::dot_g(&self.g, &(self.nabla_f_along(&s1) * &s2), &s3);
            let bil = |m: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>| (u.transpose() * m * v)[(0, 0)];
            let rhs = self.form3(&self.d_omega, &s1, &fs2, &fs3) - self.form3(&self.d_omega, &s1, &s2, &s3)
                + linalg::dot_g(&self.g, &Sample::n1_apply(&n1, self.n, &s2, &s3), &fs1)
                + bil(&self.n2, &s2, &s3) * self.eta.dot(&s1)
                + bil(&self.d_eta, &fs2, &s1) * self.eta.dot(&s3)
                - bil(&self.d_eta, &fs3, &s1) * self.eta.dot(&s2);
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }

    /// `∇_{Fe_a} F`.
    fn nabla_f_along_f(&self, a: usize) -> DMatrix<f64> {
        self.nabla_f_along(&self.f.column(a).into_owned())
    }

    fn normality_a_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for a in 0..self.n {
            let m = &self.f * &self.nabla_f[a] - self.nabla_f_along_f(a) - &self.xi * self.nabla_eta.row(a);
            r = r.max(linalg::max_abs(&m));
        }
        r
    }

    fn normality_b_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for a in 0..self.n {
            let nf = self.nabla_f_along_f(a);
            let nxi = &self.nabla_xi * self.f.column(a);
            let m = &self.nabla_f[a] - nf * &self.f + nxi * self.eta.transpose();
            r = r.max(linalg::max_abs(&m));
        }
        r
    }

    /// `(∇_{e_a}F)e_b + (∇_{Fe_a}F)Fe_b − 2g_ab ξ + η_b(e_a + N3 e_a + η_a ξ)`.
    fn blair_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for a in 0..self.n {
            let ea = self.unit(a);
            let tail = &ea + &self.n3 * &ea + &self.xi * self.eta[a];
            let m = &self.nabla_f[a] + self.nabla_f_along_f(a) * &self.f - &self.xi * self.g.row(a) * 2.0
                + tail * self.eta.transpose();
            r = r.max(linalg::max_abs(&m));
        }
        r
    }

    fn eta_tensor(&self) -> DMatrix<f64> {
        &self.eta * self.eta.transpose()
    }
}

fn max_abs_slice(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| if x.is_nan() { f64::INFINITY } else { acc.max(x.abs()) })
}

fn sweep(samples: &Samples, name: &str, tol: f64, f: impl Fn(&Sample) -> f64) -> Check {
    let mut t = Tracker::vanishing(name, tol);
    for (p, s) in samples {
        match s {
            Ok(s) => t.record(p, f(s)),
            Err(e) => t.fail(p, e.clone()),
        }
    }
    t.finish()
}

/// Runs the almost contact checks and decides every flag of the ladder.
///
/// Flag residual entries are informational; the implications between
/// theorems are gating consistency checks.
pub fn classify(acs: &AlmostContactStructure, grid: &SampleGrid, convention: Convention) -> Result<Classification> {
    acs.require_metric()?;
    let tol = grid.tol_eq;
    let base = check_almost_contact(acs, grid);
    let metric_check = |c: &Check| METRIC_CHECKS.contains(&c.name.as_str());
    let almost_contact = base.checks.iter().filter(|c| !metric_check(c)).all(|c| c.passed);
    let compatible = base.checks.iter().filter(|c| metric_check(c)).all(|c| c.passed);
    let geometry = Geometry::new(acs)?;
    let samples = geometry.samples(grid);

    let mut report = Report::new("classification", grid.len());
    report.convention = Some(convention.name().to_string());
    report.absorb("almost_contact", base);

    let m = acs.m();
    let mut flag = |name: &str, f: &dyn Fn(&Sample) -> f64| -> bool {
        let c = sweep(&samples, name, tol, f).informational();
        let held = c.passed;
        report.push(c);
        held
    };
    let contact = flag("contact_riemannian", &|s| s.contact_residual(convention));
    let normal = flag("normal", &|s| s.normal_residual(convention));
    let killing = flag("K_contact", &|s| s.killing_residual());
    let sasaki = flag("sasakian", &|s| s.sasaki_residual());
    let closed = flag("almost_kenmotsu.closed_eta", &|s| s.closed_residual());
    let warped = flag("almost_kenmotsu.d_omega", &|s| s.warped_residual());
    let kenmotsu = flag("kenmotsu", &|s| s.kenmotsu_residual());

    let flags = Flags {
        almost_contact,
        compatible,
        contact_riemannian: almost_contact && compatible && m >= 1 && contact,
        normal: almost_contact && normal,
        k_contact: almost_contact && compatible && m >= 1 && contact && killing,
        sasakian: almost_contact && compatible && sasaki,
        almost_kenmotsu: almost_contact && compatible && closed && warped,
        kenmotsu: almost_contact && compatible && kenmotsu,
    };
    let flags = if m == 0 {
        report.push(Check::skipped("contact_flags", "rank 1 (m = 0): flags above almost_contact are defined false"));
        Flags { almost_contact, compatible, ..Flags::default() }
    } else {
        flags
    };
    let half_native = |c: Check| if convention == Convention::Plain { c.informational() } else { c };
    report.push(half_native(Check::implication("sasakian_implies_K_contact", flags.sasakian, flags.k_contact)));
    report.push(half_native(Check::implication(
        "sasakian_implies_normal_contact",
        flags.sasakian,
        flags.contact_riemannian && flags.normal,
    )));
    report.push(half_native(Check::implication(
        "normal_contact_implies_sasakian",
        flags.contact_riemannian && flags.normal,
        flags.sasakian,
    )));
    report.push(Check::implication("rank3_K_contact_implies_sasakian", acs.rank() == 3 && flags.k_contact, flags.sasakian));
    report.push(Check::implication(
        "kenmotsu_implies_normal_almost_kenmotsu",
        flags.kenmotsu,
        flags.normal && flags.almost_kenmotsu,
    ));
    report.push(Check::implication(
        "normal_almost_kenmotsu_implies_kenmotsu",
        flags.normal && flags.almost_kenmotsu,
        flags.kenmotsu,
    ));
    report.push(Check::implication("kenmotsu_implies_not_K_contact", flags.kenmotsu, !flags.k_contact));
    Ok(Classification { flags, report })
}

/// Evaluates the structure identities that apply under `flags`.
///
/// Identities whose hypothesis fails are reported as skipped. Identities that
/// only hold in the half normalization are informational under `Plain`.
pub fn check_identities(acs: &AlmostContactStructure, grid: &SampleGrid, convention: Convention, flags: &Flags) -> Result<Report> {
    acs.require_metric()?;
    let tol = grid.tol_eq;
    let geometry = Geometry::new(acs)?;
    let samples = geometry.samples(grid);
    let mut report = Report::new("identities", grid.len());
    report.convention = Some(convention.name().to_string());
    let plain = convention == Convention::Plain;
    let native = |c: Check| if plain { c.informational() } else { c };

    if flags.almost_contact && flags.compatible {
        report.push(sweep(&samples, "master_formula", tol, |s| s.master_residual()));
        let normal_kn = sweep(&samples, "N1_native", tol, |s| s.normal_residual(Convention::Half)).informational();
        let crit_a = sweep(&samples, "normality_a", tol, |s| s.normality_a_residual()).informational();
        let crit_b = sweep(&samples, "normality_b", tol, |s| s.normality_b_residual()).informational();
        let (n, a, b) = (normal_kn.passed, crit_a.passed, crit_b.passed);
        report.push(normal_kn);
        report.push(crit_a);
        report.push(crit_b);
        report.push(Check::implication("normality_a_implies_normal", a, n));
        report.push(Check::implication("normal_implies_normality_a", n, a));
        report.push(Check::implication("normality_b_implies_normal", b, n));
        report.push(Check::implication("normal_implies_normality_b", n, b));
    } else {
        report.push(Check::skipped("master_formula", "requires a compatible almost contact structure"));
    }

    if flags.contact_riemannian {
        report.push(sweep(&samples, "contact_N2", tol, |s| linalg::max_abs(&s.n2)));
        report.push(sweep(&samples, "contact_N4", tol, |s| linalg::max_abs_vec(&s.n4)));
        let n3 = sweep(&samples, "N3", tol, |s| linalg::max_abs(&s.n3)).informational();
        let killing = sweep(&samples, "lie_xi_g", tol, |s| linalg::max_abs(&s.lxi_g)).informational();
        let (a, b) = (n3.passed, killing.passed);
        report.push(n3);
        report.push(killing);
        report.push(Check::implication("N3_implies_killing", a, b));
        report.push(Check::implication("killing_implies_N3", b, a));
        report.push(sweep(&samples, "nabla_xi_F", tol, |s| linalg::max_abs(&s.nabla_f_along(&s.xi))));
        report.push(sweep(&samples, "lie_xi_d_eta", tol, |s| linalg::max_abs(&s.lxi_deta)));
        report.push(sweep(&samples, "N3_symmetric", tol, |s| {
            linalg::max_abs(&(&s.g * &s.n3 - s.n3.transpose() * &s.g))
        }));
        report.push(native(sweep(&samples, "nabla_xi_blair", tol, |s| {
            linalg::max_abs(&(&s.nabla_xi + &s.f + &s.f * &s.n3))
        })));
        report.push(sweep(&samples, "N3_anticommutes_F", tol, |s| linalg::max_abs(&(&s.f * &s.n3 + &s.n3 * &s.f))));
        report.push(sweep(&samples, "N3_traces", tol, |s| {
            let t = s.n3.trace().abs().max((&s.n3 * &s.f).trace().abs());
            t.max(linalg::max_abs_vec(&(&s.n3 * &s.xi))).max(linalg::max_abs(&(s.eta.transpose() * &s.n3)))
        }));
        report.push(native(sweep(&samples, "nabla_F_blair", tol, |s| s.blair_residual())));
    } else {
        report.push(Check::skipped("contact_riemannian_identities", "requires contact_riemannian"));
    }

    if flags.k_contact {
        report.push(native(sweep(&samples, "K_contact_nabla_eta", tol, |s| {
            linalg::max_abs(&(&s.nabla_eta - &s.omega)).max(linalg::max_abs(&(s.nabla_xi.transpose() * &s.g - &s.omega)))
        })));
        report.push(native(sweep(&samples, "K_contact_nabla_F_xi", tol, |s| {
            let mut r: f64 = 0.0;
            for a in 0..s.n {
                let v = &s.nabla_f[a] * &s.xi + s.unit(a) - &s.xi * s.eta[a];
                r = r.max(linalg::max_abs_vec(&v));
            }
            r
        })));
        report.push(native(sweep(&samples, "K_contact_coclosed", tol, |s| s.codiff_eta)));
    } else {
        report.push(Check::skipped("K_contact_identities", "requires K_contact"));
    }

    if flags.kenmotsu {
        report.push(sweep(&samples, "kenmotsu_nabla_eta", tol, |s| {
            linalg::max_abs(&(&s.nabla_eta - &s.g + s.eta_tensor()))
        }));
        report.push(sweep(&samples, "kenmotsu_lie_xi_g", tol, |s| {
            linalg::max_abs(&(&s.lxi_g - (&s.g - s.eta_tensor()) * 2.0))
        }));
        report.push(sweep(&samples, "kenmotsu_lie_xi_F", tol, |s| linalg::max_abs(&s.n3)));
        report.push(sweep(&samples, "kenmotsu_lie_xi_eta", tol, |s| linalg::max_abs_vec(&s.n4)));
    } else {
        report.push(Check::skipped("kenmotsu_identities", "requires kenmotsu"));
    }
    Ok(report)
}

/// Outcome of [`contact_morphism_check`].
#[derive(Debug, Clone)]
pub struct MorphismCheck {
    pub is_contact: bool,
    pub strict: bool,
    /// `f` with `μ*η2 = f η1`, per grid point.
    pub factor: Vec<f64>,
    pub report: Report,
}

/// Tests `μ*η2 = f η1` with `f` nowhere zero, and independently `μ(ker η1) ⊆ ker η2`.
///
/// `mu[c][a]` is the `e'_c` component of `μ(e_a)`.
pub fn contact_morphism_check(
    e1: &LieAlgebroid,
    eta1: &TensorField,
    e2: &LieAlgebroid,
    eta2: &TensorField,
    mu: &[Vec<Expr>],
    grid: &SampleGrid,
) -> Result<MorphismCheck> {
    if e1.variables() != e2.variables() {
        return Err(Error::Invalid("contact morphisms require both algebroids over the same chart".into()));
    }
    let (m1, m2) = (e1.rank(), e2.rank());
    if mu.len() != m2 || mu.iter().any(|r| r.len() != m1) {
        return Err(Error::Invalid(format!("μ must be a {}×{} matrix", m2, m1)));
    }
    for (alg, eta, which) in [(e1, eta1, "η1"), (e2, eta2, "η2")] {
        let t = contact_test(alg, eta, grid, Convention::Plain)?;
        if !t.is_contact() {
            return Err(Error::Invalid(format!("{} is not a contact form on the grid", which)));
        }
    }
    let tol = grid.tol_eq;
    let mut collinear = Tracker::vanishing("pullback_collinear", tol);
    let mut nonzero = Tracker::nonvanishing("factor_nonzero", grid.tol_nonzero);
    let mut inclusion = Tracker::vanishing("kernel_inclusion", tol);
    let mut strict = Tracker::vanishing("strict", tol);
    let mut disagree = 0usize;
    let mut factor = Vec::with_capacity(grid.len());
    for p in grid.points() {
        let a = eta1.eval(p).map_err(|e| Error::eval(p, e))?.vector();
        let b = eta2.eval(p).map_err(|e| Error::eval(p, e))?.vector();
        let mut mm = DMatrix::zeros(m2, m1);
        for c in 0..m2 {
            for k in 0..m1 {
                mm[(c, k)] = mu[c][k].eval(p).map_err(|e| Error::eval(p, e))?;
            }
        }
        let pull = mm.transpose() * &b;
        let f = pull.dot(&a) / a.dot(&a);
        let r1 = linalg::max_abs_vec(&(&pull - &a * f));
        let row = DMatrix::from_row_slice(1, m1, a.as_slice());
        let kernel = orthonormal_kernel(&row);
        let r2 = kernel.iter().fold(0.0, |acc: f64, v| acc.max(b.dot(&(&mm * v)).abs()));
        if (r1 < tol) != (r2 < tol) {
            disagree += 1;
        }
        collinear.record(p, r1);
        nonzero.record(p, f);
        inclusion.record(p, r2);
        strict.record(p, f - 1.0);
        factor.push(f);
    }
    let mut report = Report::new("contact_morphism", grid.len());
    let (c1, c2, c3) = (collinear.finish(), nonzero.finish(), inclusion.finish());
    let is_contact = c1.passed && c2.passed && c3.passed;
    let s = strict.finish().informational();
    let is_strict = is_contact && s.passed;
    report.push(c1);
    report.push(c2);
    report.push(c3);
    report.push(s);
    let mut agree = Check::implication("morphism_criteria_agree", disagree > 0, false);
    agree.value = disagree as f64;
    agree.note = (disagree > 0).then(|| format!("collinearity and kernel inclusion disagree at {} points", disagree));
    report.push(agree);
    Ok(MorphismCheck { is_contact, strict: is_strict, factor, report })
}

/// Orthonormal basis of the kernel of a `1×n` row.
fn orthonormal_kernel(row: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = row.ncols();
    let mut square = DMatrix::zeros(n, n);
    square.row_mut(0).copy_from(&row.row(0));
    let (ker, _) = linalg::nullspace(&square, 1e-12 * linalg::max_abs(row).max(1.0));
    ker
}

/// `[η∧(dη)^m / dV_g](p)` with the plain `d`, per grid point.
pub fn volume_ratios(acs: &AlmostContactStructure, grid: &SampleGrid) -> Result<Vec<f64>> {
    let g = acs.require_metric()?;
    let alg = acs.algebroid();
    let deta = alg.exterior_derivative(acs.eta())?;
    let top = top_coefficient(acs.eta(), &deta, acs.m())?;
    let mut out = Vec::with_capacity(grid.len());
    for p in grid.points() {
        let w = top.eval(p).map_err(|e| Error::eval(p, e))?;
        let det = g.value_at(p)?.determinant();
        if !(det > 0.0) {
            return Err(Error::NotPositiveDefinite { point: p.clone(), eigenvalue: det });
        }
        out.push(w / libm::sqrt(det));
    }
    Ok(out)
}

/// Expected `|η∧(dη)^m / dV_g|` on a contact Riemannian structure.
pub fn volume_constant(m: usize, convention: Convention) -> f64 {
    let power = match convention {
        Convention::Plain => 1.0,
        Convention::Half => libm::pow(2.0, m as f64),
    };
    power * factorial(m)
}

/// Constancy of the volume ratio over the grid and its value.
pub fn volume_identity_check(acs: &AlmostContactStructure, grid: &SampleGrid, convention: Convention) -> Result<Report> {
    let ratios = volume_ratios(acs, grid)?;
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let expected = volume_constant(acs.m(), convention);
    let mut spread = Tracker::vanishing("volume_ratio_constant", 1e-8);
    let mut value = Tracker::vanishing("volume_ratio_value", 1e-8);
    for (p, r) in grid.points().iter().zip(&ratios) {
        spread.record(p, (r - mean) / mean.abs().max(f64::MIN_POSITIVE));
        value.record(p, (r.abs() - expected) / expected);
    }
    let mut report = Report::new("volume", grid.len());
    report.convention = Some(convention.name().to_string());
    report.push(spread.finish().with_note(format!("mean ratio {}", mean)));
    report.push(value.finish().with_note(format!("expected |ratio| = {}", expected)));
    Ok(report)
}
