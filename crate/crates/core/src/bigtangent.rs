//! The vertical Lie algebroid of the big-tangent manifold `TM ⊕ T*M` over a
//! chart `(x, y, p)`, its framed `f(3,1)`-structure, and the almost contact and
//! contact structure on the vertical Liouville distribution `V_ξ2`.
//!
//! Frame index `i` is `∂/∂y^i` and `n + i` is `∂/∂p_i`. Everything divides by
//! `√(F² + K²)`, so grids must avoid the zero section.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::algebroid::{arc_names, relabel, vanishing_check, Convention, LieAlgebroid};
use crate::expr::{self, Expr};
use crate::grid::{halton_points, ChartBox, SampleGrid};
use crate::linalg;
use crate::report::{Report, Tracker};
use crate::riemann::BundleMetric;
use crate::tensor::{combinations, TensorField};
use crate::{Error, Result};

/// Default shell `F² + K² ∈ [0.5, 10]` for sampled fibers.
pub const DEFAULT_SHELL: (f64, f64) = (0.5, 10.0);

/// Chart variables `x1..xn, y1..yn, p1..pn`.
pub fn chart_variables(n: usize) -> Vec<String> {
    let mut v = Vec::with_capacity(3 * n);
    for prefix in ["x", "y", "p"] {
        for i in 1..=n {
            v.push(format!("{}{}", prefix, i));
        }
    }
    v
}

/// Base metric `g`, the vertical algebroid `V` with its metric `G`, the
/// operator `φ`, and the framed structure `(f, ξ1, ξ2, ω¹, ω²)`.
#[derive(Debug, Clone)]
pub struct BigTangentModel {
    n: usize,
    algebroid: LieAlgebroid,
    metric: Vec<Vec<Expr>>,
    inverse: Vec<Vec<Expr>>,
    y_lower: Vec<Expr>,
    p_upper: Vec<Expr>,
    f_sq: Expr,
    k_sq: Expr,
    norm: Expr,
    big_metric: BundleMetric,
    phi: TensorField,
    f: TensorField,
    xi1: TensorField,
    xi2: TensorField,
    omega1: TensorField,
    omega2: TensorField,
}

fn shape_error(n: usize, g: &[Vec<Expr>]) -> Option<Error> {
    if g.len() != n {
        return Some(Error::RankMismatch { expected: n, found: g.len() });
    }
    g.iter().find(|r| r.len() != n).map(|r| Error::RankMismatch { expected: n, found: r.len() })
}

impl BigTangentModel {
    /// From `g_ij` given over the base variables (indices `0..n`).
    pub fn new(n: usize, g: &[Vec<Expr>]) -> Result<BigTangentModel> {
        if n == 0 {
            return Err(Error::Invalid("base dimension must be at least 1".into()));
        }
        if let Some(e) = shape_error(n, g) {
            return Err(e);
        }
        if let Some(v) = g.iter().flatten().flat_map(|e| e.variables()).find(|&v| v >= n) {
            return Err(Error::Invalid(format!("metric uses variable index {} outside the base chart", v)));
        }
        let variables = chart_variables(n);
        let names = arc_names(&variables);
        let metric: Vec<Vec<Expr>> = g.iter().map(|r| r.iter().map(|e| relabel(e, 0, &names)).collect()).collect();
        BundleMetric::new(metric.clone())?;
        let inverse = expr::inverse(&metric)
            .ok_or_else(|| Error::Degenerate("metric determinant vanishes identically".into()))?;
        let y: Vec<Expr> = (0..n).map(|i| Expr::var(n + i, &variables[n + i])).collect();
        let p: Vec<Expr> = (0..n).map(|i| Expr::var(2 * n + i, &variables[2 * n + i])).collect();
        let contract = |m: &[Vec<Expr>], v: &[Expr]| -> Vec<Expr> {
            (0..n).map(|i| Expr::sum((0..n).map(|j| &m[i][j] * &v[j]))).collect()
        };
        let y_lower = contract(&metric, &y);
        let p_upper = contract(&inverse, &p);
        let dot = |a: &[Expr], b: &[Expr]| Expr::sum(a.iter().zip(b).map(|(u, v)| u * v));
        let f_sq = dot(&y_lower, &y);
        let k_sq = dot(&p_upper, &p);
        let norm = (&f_sq + &k_sq).sqrt();

        let rank = 2 * n;
        let anchor = (0..rank)
            .map(|a| (0..3 * n).map(|i| if i == n + a { Expr::one() } else { Expr::zero() }).collect())
            .collect();
        let algebroid = LieAlgebroid::from_brackets(variables, anchor, |_, _, _| Expr::zero())?.with_labels(
            (1..=n).map(|i| format!("dy{}", i)).chain((1..=n).map(|i| format!("dp{}", i))).collect(),
        )?;
        let big_metric = BundleMetric::from_upper(rank, |a, b| match (a < n, b < n) {
            (true, true) => metric[a][b].clone(),
            (false, false) => inverse[a - n][b - n].clone(),
            _ => Expr::zero(),
        });
        let phi = TensorField::endomorphism(rank, |c, b| match (c < n, b < n) {
            (false, true) => -&metric[b][c - n],
            (true, false) => inverse[b - n][c].clone(),
            _ => Expr::zero(),
        });
        let over_r = |e: &Expr| Expr::quotient(e.clone(), norm.clone());
        let xi2 = TensorField::section(y.iter().chain(&p).map(over_r).collect());
        let xi1 = TensorField::section(p_upper.iter().map(over_r).chain(y_lower.iter().map(|e| -over_r(e))).collect());
        let omega1 = TensorField::one_form(p.iter().map(over_r).chain(y.iter().map(|e| -over_r(e))).collect());
        let omega2 = TensorField::one_form(y_lower.iter().chain(&p_upper).map(over_r).collect());
        let f = TensorField::endomorphism(rank, |c, b| {
            Expr::sum([
                phi.matrix_entry(c, b).clone(),
                -(&xi1.as_vector()[c] * &omega2.as_vector()[b]),
                &xi2.as_vector()[c] * &omega1.as_vector()[b],
            ])
        });
        Ok(BigTangentModel {
            n,
            algebroid,
            metric,
            inverse,
            y_lower,
            p_upper,
            f_sq,
            k_sq,
            norm,
            big_metric,
            phi,
            f,
            xi1,
            xi2,
            omega1,
            omega2,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The vertical algebroid `V` of rank `2n` over the `3n`-dimensional chart.
    pub fn algebroid(&self) -> &LieAlgebroid {
        &self.algebroid
    }

    /// `g_ij(x)` over the `3n` chart.
    pub fn metric(&self) -> &[Vec<Expr>] {
        &self.metric
    }

    /// `g^ij(x)`.
    pub fn inverse(&self) -> &[Vec<Expr>] {
        &self.inverse
    }

    /// `y_i = g_ij y^j`.
    pub fn y_lower(&self) -> &[Expr] {
        &self.y_lower
    }

    /// `p^i = g^ij p_j`.
    pub fn p_upper(&self) -> &[Expr] {
        &self.p_upper
    }

    /// `F² = g_ij y^i y^j`.
    pub fn f_squared(&self) -> &Expr {
        &self.f_sq
    }

    /// `K² = g^ij p_i p_j`.
    pub fn k_squared(&self) -> &Expr {
        &self.k_sq
    }

    /// `√(F² + K²)`.
    pub fn norm(&self) -> &Expr {
        &self.norm
    }

    /// `G = g_ij dy^i dy^j + g^ij dp_i dp_j`.
    pub fn big_metric(&self) -> &BundleMetric {
        &self.big_metric
    }

    pub fn phi(&self) -> &TensorField {
        &self.phi
    }

    /// `f = φ − ω²⊗ξ1 + ω¹⊗ξ2`.
    pub fn f(&self) -> &TensorField {
        &self.f
    }

    pub fn xi1(&self) -> &TensorField {
        &self.xi1
    }

    pub fn xi2(&self) -> &TensorField {
        &self.xi2
    }

    pub fn omega1(&self) -> &TensorField {
        &self.omega1
    }

    pub fn omega2(&self) -> &TensorField {
        &self.omega2
    }

    /// Liouville fields `ℰ1 = y^i ∂/∂y^i`, `ℰ2 = p_i ∂/∂p_i` and `ℰ = ℰ1 + ℰ2`.
    pub fn liouville_fields(&self) -> [TensorField; 3] {
        let n = self.n;
        let coord = |k: usize| self.algebroid.coordinate(k);
        let e1 = TensorField::section((0..2 * n).map(|a| if a < n { coord(n + a) } else { Expr::zero() }).collect());
        let e2 = TensorField::section((0..2 * n).map(|a| if a < n { Expr::zero() } else { coord(n + a) }).collect());
        let e = e1.add(&e2).expect("same rank");
        [e1, e2, e]
    }

    /// `Φ(X, Y) = G(fX, Y)` as a full covariant tensor, not assumed skew.
    pub fn phi_form_full(&self) -> TensorField {
        let m = 2 * self.n;
        TensorField::covariant(m, 2, |i| {
            Expr::sum((0..m).map(|c| self.f.matrix_entry(c, i[0]) * self.big_metric.entry(c, i[1])))
        })
    }

    /// `Φ` as a 2-form built from its entries with `a < b`.
    pub fn phi_form(&self) -> TensorField {
        let m = 2 * self.n;
        TensorField::form(m, 2, |i| {
            Expr::sum((0..m).map(|c| self.f.matrix_entry(c, i[0]) * self.big_metric.entry(c, i[1])))
        })
    }

    /// `φ = δ_i^j θ^i ∧ k_j`.
    pub fn canonical_form(&self) -> TensorField {
        let n = self.n;
        TensorField::form(2 * n, 2, |i| if i[0] < n && i[1] == i[0] + n { Expr::one() } else { Expr::zero() })
    }

    /// Rejects grids where `g` is not positive definite or `F² + K² <= 10·tol_nonzero`.
    pub fn require_admissible(&self, grid: &SampleGrid) -> Result<()> {
        if grid.bounds().dim() != 3 * self.n {
            return Err(Error::Grid(format!("expected a {}-dimensional chart, found {}", 3 * self.n, grid.bounds().dim())));
        }
        let g = BundleMetric::new(self.metric.clone())?;
        g.require_positive_definite(grid)?;
        for p in grid.points() {
            let s = (&self.f_sq + &self.k_sq).eval(p).map_err(|e| Error::eval(p, e))?;
            if !(s > 10.0 * grid.tol_nonzero) {
                return Err(Error::Degenerate(format!("point {:?} lies on the zero section (F² + K² = {:e})", p, s)));
            }
        }
        Ok(())
    }

    /// Halton points with `x` in `base` and fibers rescaled so that
    /// `F² + K²` is spread over `shell`.
    pub fn sample_grid(&self, base: &ChartBox, count: usize, seed: u64, shell: (f64, f64)) -> Result<SampleGrid> {
        let n = self.n;
        if base.dim() != n {
            return Err(Error::Grid(format!("base box has dimension {}, expected {}", base.dim(), n)));
        }
        if !(shell.0 > 0.0 && shell.0 <= shell.1) {
            return Err(Error::Grid(format!("invalid shell [{}, {}]", shell.0, shell.1)));
        }
        let mut points = Vec::with_capacity(count);
        for u in halton_points(3 * n + 1, count, seed) {
            let mut p = base.scale(&u[..n]);
            let mut fiber: Vec<f64> = u[n..3 * n].iter().map(|v| 2.0 * v - 1.0).collect();
            if fiber.iter().all(|v| v.abs() < 1e-6) {
                fiber[0] = 1.0;
            }
            p.extend_from_slice(&fiber);
            let s = (&self.f_sq + &self.k_sq).eval(&p).map_err(|e| Error::eval(&p, e))?;
            if !(s > 0.0) {
                return Err(Error::NotPositiveDefinite { point: p[..n].to_vec(), eigenvalue: s });
            }
            let target = shell.0 + u[3 * n] * (shell.1 - shell.0);
            let k = libm::sqrt(target / s);
            for v in &mut p[n..] {
                *v *= k;
            }
            points.push(p);
        }
        let mut lo = base.lo.clone();
        let mut hi = base.hi.clone();
        for k in n..3 * n {
            let r = points.iter().map(|p| p[k].abs()).fold(0.0, f64::max);
            lo.push(-r);
            hi.push(r);
        }
        SampleGrid::new(ChartBox::new(lo, hi)?, points)
    }
}

/// [`BigTangentModel::new`] followed by [`BigTangentModel::require_admissible`].
pub fn build_big_tangent(n: usize, g: &[Vec<Expr>], grid: &SampleGrid) -> Result<BigTangentModel> {
    let model = BigTangentModel::new(n, g)?;
    model.require_admissible(grid)?;
    Ok(model)
}

/// Numeric values of the model at one point.
struct Sample {
    n: usize,
    y: DVector<f64>,
    p: DVector<f64>,
    yl: DVector<f64>,
    pu: DVector<f64>,
    g: DMatrix<f64>,
    gi: DMatrix<f64>,
    r: f64,
    big: DMatrix<f64>,
    phi: DMatrix<f64>,
    f: DMatrix<f64>,
    xi1: DVector<f64>,
    xi2: DVector<f64>,
    w1: DVector<f64>,
    w2: DVector<f64>,
}

fn matrix_of(rows: &[Vec<Expr>], p: &[f64]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = rows[i][j].eval(p).map_err(|e| Error::eval(p, e))?;
        }
    }
    Ok(m)
}

fn ev(t: &TensorField, p: &[f64]) -> Result<crate::tensor::TensorValue> {
    t.eval(p).map_err(|e| Error::eval(p, e))
}

impl Sample {
    fn at(model: &BigTangentModel, p: &[f64]) -> Result<Sample> {
        let n = model.n;
        let vec_of = |v: &[Expr]| -> Result<DVector<f64>> {
            v.iter().map(|e| e.eval(p).map_err(|err| Error::eval(p, err))).collect::<Result<Vec<_>>>().map(DVector::from_vec)
        };
        Ok(Sample {
            n,
            y: DVector::from_column_slice(&p[n..2 * n]),
            p: DVector::from_column_slice(&p[2 * n..3 * n]),
            yl: vec_of(&model.y_lower)?,
            pu: vec_of(&model.p_upper)?,
            g: matrix_of(&model.metric, p)?,
            gi: matrix_of(&model.inverse, p)?,
            r: model.norm.eval(p).map_err(|e| Error::eval(p, e))?,
            big: model.big_metric.value_at(p)?,
            phi: ev(&model.phi, p)?.matrix(),
            f: ev(&model.f, p)?.matrix(),
            xi1: ev(&model.xi1, p)?.vector(),
            xi2: ev(&model.xi2, p)?.vector(),
            w1: ev(&model.omega1, p)?.vector(),
            w2: ev(&model.omega2, p)?.vector(),
        })
    }

    fn r2(&self) -> f64 {
        self.r * self.r
    }

    /// `G(f ∂_a, f ∂_b)` from the displayed component formulas.
    fn iiix7(&self) -> DMatrix<f64> {
        let n = self.n;
        let s = self.r2();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.g[(i, j)] - (self.yl[i] * self.yl[j] + self.p[i] * self.p[j]) / s;
                let mixed = (self.p[i] * self.y[j] - self.yl[i] * self.pu[j]) / s;
                m[(i, n + j)] = mixed;
                m[(n + j, i)] = mixed;
                m[(n + i, n + j)] = self.gi[(i, j)] - (self.y[i] * self.y[j] + self.pu[i] * self.pu[j]) / s;
            }
        }
        m
    }

    /// Columns `f(∂/∂y^i)`, `f(∂/∂p_i)` from the displayed component formulas.
    fn iiix6(&self) -> DMatrix<f64> {
        let n = self.n;
        let s = self.r2();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                m[(j, i)] = (self.p[i] * self.y[j] - self.yl[i] * self.pu[j]) / s;
                m[(n + j, i)] = -(self.g[(i, j)] - (self.yl[i] * self.yl[j] + self.p[i] * self.p[j]) / s);
                m[(j, n + i)] = self.gi[(i, j)] - (self.pu[i] * self.pu[j] + self.y[i] * self.y[j]) / s;
                m[(n + j, n + i)] = (self.pu[i] * self.yl[j] - self.y[i] * self.p[j]) / s;
            }
        }
        m
    }

    /// `Φ(∂_a, ∂_b)` from the displayed component formulas.
    fn iiix8(&self) -> DMatrix<f64> {
        let n = self.n;
        let s = self.r2();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let delta = if i == j { 1.0 } else { 0.0 };
                m[(i, j)] = (self.p[i] * self.yl[j] - self.yl[i] * self.p[j]) / s;
                m[(i, n + j)] = -delta + (self.yl[i] * self.y[j] + self.p[i] * self.pu[j]) / s;
                m[(n + j, i)] = -m[(i, n + j)];
                m[(n + i, n + j)] = (self.pu[i] * self.y[j] - self.y[i] * self.pu[j]) / s;
            }
        }
        m
    }

    /// `d_V ω¹(∂_a, ∂_b)` from the displayed component formulas (with their ½).
    fn iiix9(&self) -> DMatrix<f64> {
        let n = self.n;
        let s = self.r2();
        let c = 2.0 * s * self.r;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let delta = if i == j { 1.0 } else { 0.0 };
                m[(i, j)] = (self.p[i] * self.yl[j] - self.yl[i] * self.p[j]) / c;
                m[(n + i, n + j)] = (self.pu[i] * self.y[j] - self.y[i] * self.pu[j]) / c;
                m[(i, n + j)] = (-2.0 * delta + (self.yl[i] * self.y[j] + self.p[i] * self.pu[j]) / s) / (2.0 * self.r);
                m[(n + j, i)] = -m[(i, n + j)];
            }
        }
        m
    }

    /// `P` from its block components `P¹, P², P³, P⁴`.
    fn projector_value(&self) -> DMatrix<f64> {
        let n = self.n;
        let s = self.r2();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let delta = if i == j { 1.0 } else { 0.0 };
                m[(i, j)] = delta - self.yl[j] * self.y[i] / s;
                m[(n + i, n + j)] = delta - self.p[i] * self.pu[j] / s;
                m[(n + i, j)] = -self.yl[j] * self.p[i] / s;
                m[(i, n + j)] = -self.pu[j] * self.y[i] / s;
            }
        }
        m
    }
}

/// `P¹..P⁴` blocks of a projector matrix in frame order `(y, p)`:
/// `P¹^i_j = P[(i, j)]`, `P²^j_k` is the coefficient of `k_j ⊗ ∂/∂p_k`,
/// `P³_{ij} = P[(n+i, j)]`, `P⁴^{ij} = P[(i, n+j)]`.
struct Blocks<'a> {
    n: usize,
    p: &'a DMatrix<f64>,
}

impl Blocks<'_> {
    fn p1(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }
    fn p2(&self, j: usize, k: usize) -> f64 {
        self.p[(self.n + k, self.n + j)]
    }
    fn p3(&self, i: usize, j: usize) -> f64 {
        self.p[(self.n + i, j)]
    }
    fn p4(&self, i: usize, j: usize) -> f64 {
        self.p[(i, self.n + j)]
    }

    /// The displayed right-hand sides for `Φ̄` on the projected frame.
    fn v9(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let sum = |f: &dyn Fn(usize) -> f64| (0..n).map(f).sum::<f64>();
                m[(i, j)] = sum(&|k| self.p1(k, j) * self.p3(k, i) - self.p1(k, i) * self.p3(k, j));
                m[(i, n + j)] = sum(&|k| self.p3(k, i) * self.p4(k, j) - self.p1(k, i) * self.p2(j, k));
                m[(n + j, i)] = -m[(i, n + j)];
                m[(n + i, n + j)] = sum(&|k| self.p2(i, k) * self.p4(k, j) - self.p4(k, i) * self.p2(j, k));
            }
        }
        m
    }
}

/// Runs `body` at every grid point and finishes its trackers.
fn sweep(
    model: &BigTangentModel,
    grid: &SampleGrid,
    title: &str,
    mut t: Vec<Tracker>,
    mut body: impl FnMut(&Sample, &[f64], &mut [Tracker]) -> Result<()>,
) -> Report {
    for p in grid.points() {
        let res = Sample::at(model, p).and_then(|s| body(&s, p, &mut t));
        if let Err(e) = res {
            t.iter_mut().for_each(|t| t.fail(p, e.to_string()));
        }
    }
    let mut report = Report::new(title, grid.len());
    for t in t {
        report.push(t.finish());
    }
    report
}

const FRAMED_CHECKS: [&str; 20] = [
    "f2_relations",
    "xi2_liouville",
    "phi_squared",
    "phi_isometry",
    "phi_xi",
    "omega_phi",
    "omega_dual",
    "pairing",
    "f_xi",
    "omega_f",
    "f_squared",
    "f_cubed",
    "rank_kernel",
    "rank_image",
    "metric_identity",
    "f_components",
    "f_metric_components",
    "metric_positive_definite",
    "norm_positive",
    "phi_nijenhuis",
];

/// Framed `f(3,1)`-structure checks: the relations `y_i y^i = F²`, the
/// operator `φ` and its lemma, the framed identities, numeric rank `2n − 2`,
/// the metric identity `G(f·, f·) = G − ω¹⊗ω¹ − ω²⊗ω²` and its components.
pub fn framed_f_structure(model: &BigTangentModel, grid: &SampleGrid) -> Result<Report> {
    let n = model.n;
    let m = 2 * n;
    let tol = grid.tol_eq;
    let mut t: Vec<Tracker> = FRAMED_CHECKS[..17].iter().map(|c| Tracker::vanishing(c, tol)).collect();
    t[13] = Tracker::nonvanishing("rank_image", grid.tol_nonzero);
    t.push(Tracker::nonvanishing(FRAMED_CHECKS[17], grid.tol_nonzero));
    t.push(Tracker::nonvanishing(FRAMED_CHECKS[18], grid.tol_nonzero));
    let [_, _, liouville] = model.liouville_fields();
    let id = DMatrix::<f64>::identity(m, m);
    let mut report = sweep(model, grid, "framed_f_structure", t, |s, p, t| {
        let lowered = linalg::max_abs_vec(&(&s.yl - &s.g * &s.y)).max(linalg::max_abs_vec(&(&s.pu - &s.gi * &s.p)));
        let norms = s.r2() - linalg::dot_g(&s.g, &s.y, &s.y) - linalg::dot_g(&s.gi, &s.p, &s.p);
        t[0].record(p, lowered.max((s.y.dot(&s.yl) + s.p.dot(&s.pu) - s.r2()).abs()).max(norms.abs()));
        let e = ev(&liouville, p)?.vector();
        t[1].record(p, linalg::max_abs_vec(&(&s.xi2 * s.r - e)));
        t[2].record(p, linalg::max_abs(&(&s.phi * &s.phi + &id)));
        t[3].record(p, linalg::max_abs(&(s.phi.transpose() * &s.big * &s.phi - &s.big)));
        t[4].record(p, linalg::max_abs_vec(&(&s.phi * &s.xi1 + &s.xi2)).max(linalg::max_abs_vec(&(&s.phi * &s.xi2 - &s.xi1))));
        let o1 = s.phi.transpose() * &s.w1 - &s.w2;
        let o2 = s.phi.transpose() * &s.w2 + &s.w1;
        t[5].record(p, linalg::max_abs_vec(&o1).max(linalg::max_abs_vec(&o2)));
        let d1 = &s.big * &s.xi1 - &s.w1;
        let d2 = &s.big * &s.xi2 - &s.w2;
        t[6].record(p, linalg::max_abs_vec(&d1).max(linalg::max_abs_vec(&d2)));
        let pair = [
            s.w1.dot(&s.xi1) - 1.0,
            s.w1.dot(&s.xi2),
            s.w2.dot(&s.xi1),
            s.w2.dot(&s.xi2) - 1.0,
        ];
        t[7].record(p, pair.iter().fold(0.0, |a, b| a.max(b.abs())));
        t[8].record(p, linalg::max_abs_vec(&(&s.f * &s.xi1)).max(linalg::max_abs_vec(&(&s.f * &s.xi2))));
        let of1 = s.f.transpose() * &s.w1;
        let of2 = s.f.transpose() * &s.w2;
        t[9].record(p, linalg::max_abs_vec(&of1).max(linalg::max_abs_vec(&of2)));
        let frame = &s.xi1 * s.w1.transpose() + &s.xi2 * s.w2.transpose();
        t[10].record(p, linalg::max_abs(&(&s.f * &s.f + &id - &frame)));
        t[11].record(p, linalg::max_abs(&(&s.f * &s.f * &s.f + &s.f)));
        let sv = linalg::singular_values(&s.f);
        t[12].record(p, sv[m - 2]);
        t[13].record(p, if m > 2 { sv[m - 3] } else { f64::INFINITY });
        let rhs = &s.big - &s.w1 * s.w1.transpose() - &s.w2 * s.w2.transpose();
        t[14].record(p, linalg::max_abs(&(s.f.transpose() * &s.big * &s.f - &rhs)));
        t[15].record(p, linalg::max_abs(&(&s.f - s.iiix6())));
        t[16].record(p, linalg::max_abs(&(s.f.transpose() * &s.big * &s.f - s.iiix7())));
        t[17].record(p, linalg::min_eigenvalue(&s.g).max(0.0));
        t[18].record(p, s.r);
        Ok(())
    });
    let nphi = model.algebroid.nijenhuis(&model.phi)?;
    report.push(crate::algebroid::field_check(grid, FRAMED_CHECKS[19], &nphi, tol));
    Ok(report)
}

/// `Φ`, its components, `d_V ω¹` against the displayed components, the
/// decomposition `Φ = 2√(F²+K²) d_V ω¹ + φ`, the annihilator of `Φ`, and
/// `[ξ1, ξ2] = ξ1/√(F²+K²)`. The displayed `d_V ω¹` carries explicit ½
/// factors, so `convention` is normally [`Convention::Half`].
pub fn phi_form_and_decomposition(model: &BigTangentModel, grid: &SampleGrid, convention: Convention) -> Result<Report> {
    let n = model.n;
    let m = 2 * n;
    let tol = grid.tol_eq;
    let full = model.phi_form_full();
    let dw1 = model.algebroid.exterior_derivative_with(&model.omega1, convention)?;
    let canonical = model.canonical_form();
    let names = ["phi_form_skew", "phi_components", "d_omega1_components", "decomposition", "annihilator"];
    let mut t: Vec<Tracker> = names.iter().map(|c| Tracker::vanishing(c, tol)).collect();
    t.push(Tracker::vanishing("annihilator_dimension", tol));
    t.push(Tracker::nonvanishing("annihilator_rank", grid.tol_nonzero));
    let mut report = sweep(model, grid, "phi_form", t, |s, p, t| {
        let phi = ev(&full, p)?.matrix();
        let d = ev(&dw1, p)?.matrix();
        let can = ev(&canonical, p)?.matrix();
        t[0].record(p, linalg::max_abs(&(&phi + phi.transpose())));
        t[1].record(p, linalg::max_abs(&(&phi - s.iiix8())));
        t[2].record(p, linalg::max_abs(&(&d - s.iiix9())));
        t[3].record(p, linalg::max_abs(&(&phi - &d * (2.0 * s.r) - can)));
        let a1 = phi.transpose() * &s.xi1;
        let a2 = phi.transpose() * &s.xi2;
        t[4].record(p, linalg::max_abs_vec(&(&phi * &s.xi1)).max(linalg::max_abs_vec(&(&phi * &s.xi2))).max(linalg::max_abs_vec(&a1)).max(linalg::max_abs_vec(&a2)));
        let sv = linalg::singular_values(&phi);
        t[5].record(p, sv[m - 2]);
        t[6].record(p, if m > 2 { sv[m - 3] } else { f64::INFINITY });
        Ok(())
    });
    let bracket = model.algebroid.bracket(&model.xi1, &model.xi2)?;
    let target = model.xi1.scale(&Expr::quotient(Expr::one(), model.norm.clone()));
    report.push(crate::algebroid::field_check(grid, "xi_bracket", &bracket.sub(&target)?, tol));
    report.convention = Some(convention.name().to_string());
    Ok(report)
}

/// The projector `P = I − ω²⊗ξ2` onto `V_ξ2`, the projected frame
/// `P(∂/∂y^i), P(∂/∂p_i)` (overcomplete: `2n` sections spanning rank `2n − 1`),
/// and the restricted structure `(f̄, ξ̄, η̄, Ḡ) = (f, ξ1, ω¹, G)` on `V_ξ2`.
#[derive(Debug, Clone)]
pub struct LiouvilleRestriction {
    model: BigTangentModel,
    projector: TensorField,
    frame: Vec<TensorField>,
}

impl LiouvilleRestriction {
    pub fn model(&self) -> &BigTangentModel {
        &self.model
    }

    pub fn projector(&self) -> &TensorField {
        &self.projector
    }

    pub fn frame(&self) -> &[TensorField] {
        &self.frame
    }

    /// `f̄`: `f` acting on `V_ξ2`.
    pub fn f_bar(&self) -> &TensorField {
        &self.model.f
    }

    pub fn xi_bar(&self) -> &TensorField {
        &self.model.xi1
    }

    pub fn eta_bar(&self) -> &TensorField {
        &self.model.omega1
    }

    /// Projector identities, the block components, orthogonality to `ξ2`, and
    /// closure of `V_ξ2` under the bracket.
    pub fn report(&self, grid: &SampleGrid) -> Result<Report> {
        let model = &self.model;
        let m = 2 * model.n;
        let tol = grid.tol_eq;
        let names = ["idempotent", "projector_components", "projected_metric", "omega2_restricted", "p_xi", "decomposition", "fbar_tangent"];
        let t: Vec<Tracker> = names.iter().map(|c| Tracker::vanishing(c, tol)).collect();
        let proj = &self.projector;
        let id = DMatrix::<f64>::identity(m, m);
        let mut report = sweep(model, grid, "liouville_restriction", t, |s, p, t| {
            let pm = ev(proj, p)?.matrix();
            t[0].record(p, linalg::max_abs(&(&pm * &pm - &pm)));
            t[1].record(p, linalg::max_abs(&(&pm - s.projector_value())));
            let gp = &s.big * &pm;
            let pgp = pm.transpose() * &s.big * &pm;
            let rhs = &s.big - &s.w2 * s.w2.transpose();
            t[2].record(p, linalg::max_abs(&(&gp - &pgp)).max(linalg::max_abs(&(&pgp - rhs))));
            t[3].record(p, linalg::max_abs(&(pm.transpose() * &s.w2)));
            t[4].record(p, linalg::max_abs_vec(&(&pm * &s.xi2)).max(linalg::max_abs_vec(&(&pm * &s.xi1 - &s.xi1))));
            t[5].record(p, linalg::max_abs(&(&pm + &s.xi2 * s.w2.transpose() - &id)));
            t[6].record(p, linalg::max_abs(&(s.w2.transpose() * &s.f * &pm)));
            Ok(())
        });
        let mut closure = Vec::new();
        for pair in combinations(m, 2) {
            let b = model.algebroid.bracket(&self.frame[pair[0]], &self.frame[pair[1]])?;
            closure.push(Expr::sum(b.as_vector().iter().zip(model.omega2.as_vector()).map(|(u, w)| u * w)));
        }
        report.push(vanishing_check(grid, "bracket_closure", &closure, tol));
        Ok(report)
    }
}

/// Builds the projector and the projected frame.
pub fn liouville_restriction(model: &BigTangentModel) -> LiouvilleRestriction {
    let m = 2 * model.n;
    let projector = TensorField::endomorphism(m, |c, b| {
        let delta = if c == b { Expr::one() } else { Expr::zero() };
        delta - &model.xi2.as_vector()[c] * &model.omega2.as_vector()[b]
    });
    let frame = (0..m).map(|b| projector.apply(&TensorField::frame_section(m, b)).expect("rank")).collect();
    LiouvilleRestriction { model: model.clone(), projector, frame }
}

/// A `G`-orthonormal basis of `ξ2^⊥` at one point.
fn orthonormal_complement(big: &DMatrix<f64>, xi2: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    let m = big.nrows();
    let mut basis: Vec<DVector<f64>> = vec![xi2.clone()];
    for k in 0..m {
        let mut v = DVector::zeros(m);
        v[k] = 1.0;
        for b in &basis {
            let c = linalg::dot_g(big, &v, b) / linalg::dot_g(big, b, b);
            v -= b * c;
        }
        let norm = libm::sqrt(linalg::dot_g(big, &v, &v).max(0.0));
        if norm > 1e-8 {
            basis.push(v / norm);
        }
        if basis.len() == m {
            break;
        }
    }
    if basis.len() != m {
        return Err(Error::Degenerate("could not complete an orthonormal basis".into()));
    }
    Ok(basis.split_off(1))
}

/// Almost contact and contact structure on `V_ξ2`: `f̄³ + f̄ = 0`, rank `2n − 2`,
/// `η̄(ξ̄) = 1`, `f̄ξ̄ = 0`, `η̄∘f̄ = 0`, `f̄² = −I + η̄⊗ξ̄`, `Ḡ(f̄·, f̄·) = Ḡ − η̄⊗η̄`,
/// the displayed components of `Φ̄` and `d̄_V η̄`, `d̄_V η̄ = Φ̄/√(F²+K²)`, and
/// `η̄ ∧ (d̄_V η̄)^{n−1} ≠ 0`. All but the last are evaluated on the projected frame.
pub fn verify_contact_on_restriction(restriction: &LiouvilleRestriction, grid: &SampleGrid, convention: Convention) -> Result<Report> {
    let model = &restriction.model;
    let n = model.n;
    let m = 2 * n;
    let tol = grid.tol_eq;
    let full = model.phi_form_full();
    let dw1 = model.algebroid.exterior_derivative_with(&model.omega1, convention)?;
    let canonical = model.canonical_form();
    let names = [
        "fbar_cubed",
        "fbar_rank_kernel",
        "eta_xi",
        "fbar_xi",
        "eta_fbar",
        "fbar_squared",
        "metric_identity",
        "phi_bar_components",
        "d_eta_components",
        "d_eta_phi",
    ];
    let mut t: Vec<Tracker> = names.iter().map(|c| Tracker::vanishing(c, tol)).collect();
    t.push(Tracker::nonvanishing("fbar_rank_image", grid.tol_nonzero));
    t.push(Tracker::nonvanishing("contact_form", grid.tol_nonzero));
    t.push(Tracker::vanishing("canonical_restricted", tol));
    let proj = &restriction.projector;
    let id = DMatrix::<f64>::identity(m, m);
    let mut report = sweep(model, grid, "restricted_contact", t, |s, p, t| {
        let pm = ev(proj, p)?.matrix();
        let phi = ev(&full, p)?.matrix();
        let d = ev(&dw1, p)?.matrix();
        let f = &s.f;
        let fp = f * &pm;
        t[0].record(p, linalg::max_abs(&((f * f * f + f) * &pm)));
        let sv = linalg::singular_values(&fp);
        t[1].record(p, sv[m - 2]);
        t[10].record(p, if m > 2 { sv[m - 3] } else { f64::INFINITY });
        t[2].record(p, (s.w1.dot(&s.xi1) - 1.0).abs());
        t[3].record(p, linalg::max_abs_vec(&(f * &s.xi1)));
        t[4].record(p, linalg::max_abs(&(s.w1.transpose() * &fp)));
        t[5].record(p, linalg::max_abs(&((f * f + &id - &s.xi1 * s.w1.transpose()) * &pm)));
        let v7 = pm.transpose() * (f.transpose() * &s.big * f - &s.big + &s.w1 * s.w1.transpose()) * &pm;
        t[6].record(p, linalg::max_abs(&v7));
        let phi_bar = pm.transpose() * &phi * &pm;
        let blocks = Blocks { n, p: &pm }.v9();
        t[7].record(p, linalg::max_abs(&(&phi_bar - &blocks)));
        let d_bar = pm.transpose() * &d * &pm;
        t[8].record(p, linalg::max_abs(&(&d_bar - &blocks / s.r)));
        t[9].record(p, linalg::max_abs(&(&d_bar - &phi_bar / s.r)));
        let basis = orthonormal_complement(&s.big, &s.xi2)?;
        let k = basis.len();
        let mut bordered = DMatrix::zeros(k + 1, k + 1);
        for a in 0..k {
            let e = s.w1.dot(&basis[a]);
            bordered[(0, a + 1)] = e;
            bordered[(a + 1, 0)] = -e;
            for b in 0..k {
                bordered[(a + 1, b + 1)] = basis[a].dot(&(&d * &basis[b]));
            }
        }
        // η ∧ ω^{n−1} on an orthonormal basis is (n−1)! times the bordered Pfaffian.
        let fact: f64 = (1..n).map(|i| i as f64).product();
        t[11].record(p, fact * libm::sqrt(bordered.determinant().abs()));
        let can = ev(&canonical, p)?.matrix();
        t[12].record(p, linalg::max_abs(&(pm.transpose() * can * &pm)));
        Ok(())
    });
    let last = report.checks.len() - 1;
    let note = report.checks[last].clone().informational().with_note("φ restricted to V_ξ2; reported, not required to vanish");
    report.checks[last] = note;
    report.convention = Some(convention.name().to_string());
    Ok(report)
}

/// The whole chain: framed structure, `Φ`, restriction and contact checks.
pub fn big_tangent_report(model: &BigTangentModel, grid: &SampleGrid, convention: Convention) -> Result<Report> {
    model.require_admissible(grid)?;
    let mut report = Report::new("bigtangent", grid.len());
    report.convention = Some(convention.name().to_string());
    report.absorb("algebroid", model.algebroid.validate(grid));
    report.absorb("framed", framed_f_structure(model, grid)?);
    report.absorb("phi", phi_form_and_decomposition(model, grid, convention)?);
    let restriction = liouville_restriction(model);
    report.absorb("liouville", restriction.report(grid)?);
    report.absorb("contact", verify_contact_on_restriction(&restriction, grid, convention)?);
    Ok(report)
}
