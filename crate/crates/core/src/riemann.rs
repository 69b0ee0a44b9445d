//! Bundle metrics, the Levi-Civita connection, and derived operators.
//!
//! Christoffel symbols are obtained pointwise from the Koszul formula
//!
//! ```text
//! 2g(∇_a e_b, e_c) = ρ_a g_bc + ρ_b g_ac − ρ_c g_ab + C^d_ab g_dc − C^d_ac g_db − C^d_bc g_da
//! ```
//!
//! by solving the `m×m` system with the metric matrix at that point.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::algebroid::LieAlgebroid;
use crate::expr::Expr;
use crate::grid::SampleGrid;
use crate::linalg;
use crate::report::{Check, Report, Tracker};
use crate::tensor::{TensorField, TensorValue, Variance};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BundleMetric {
    g: Vec<Vec<Expr>>,
}

impl BundleMetric {
    /// Symmetric metric from a full matrix; `g[a][b]` and `g[b][a]` must agree.
    pub fn new(g: Vec<Vec<Expr>>) -> Result<BundleMetric> {
        let m = g.len();
        if let Some(row) = g.iter().find(|r| r.len() != m) {
            return Err(Error::RankMismatch { expected: m, found: row.len() });
        }
        let probes: Vec<Vec<f64>> = {
            let n = g.iter().flatten().flat_map(|e| e.variables()).max().map_or(0, |v| v + 1);
            crate::grid::halton_points(n, 8, 0x6d65).into_iter().map(|u| u.iter().map(|v| 1.6 * v - 0.8).collect()).collect()
        };
        for a in 0..m {
            for b in a + 1..m {
                if g[a][b] == g[b][a] {
                    continue;
                }
                let same = probes.iter().all(|p| match (g[a][b].eval(p), g[b][a].eval(p)) {
                    (Ok(x), Ok(y)) => (x - y).abs() <= 1e-12 * (1.0 + x.abs()),
                    (Err(_), Err(_)) => true,
                    _ => false,
                });
                if !same {
                    return Err(Error::AsymmetricMetric { a, b });
                }
            }
        }
        let sym = (0..m).map(|a| (0..m).map(|b| if a <= b { g[a][b].clone() } else { g[b][a].clone() }).collect()).collect();
        Ok(BundleMetric { g: sym })
    }

    /// Builds `g_ab = f(a, b)` for `a <= b`, mirrored below the diagonal.
    pub fn from_upper(rank: usize, mut f: impl FnMut(usize, usize) -> Expr) -> BundleMetric {
        let mut g = vec![vec![Expr::zero(); rank]; rank];
        for a in 0..rank {
            for b in a..rank {
                let v = f(a, b);
                g[b][a] = v.clone();
                g[a][b] = v;
            }
        }
        BundleMetric { g }
    }

    pub fn euclidean(rank: usize) -> BundleMetric {
        BundleMetric::from_upper(rank, |a, b| if a == b { Expr::one() } else { Expr::zero() })
    }

    pub fn rank(&self) -> usize {
        self.g.len()
    }

    pub fn entry(&self, a: usize, b: usize) -> &Expr {
        &self.g[a][b]
    }

    pub fn matrix(&self) -> &[Vec<Expr>] {
        &self.g
    }

    pub fn scale(&self, c: &Expr) -> BundleMetric {
        BundleMetric { g: self.g.iter().map(|r| r.iter().map(|e| c * e).collect()).collect() }
    }

    pub fn as_tensor(&self) -> TensorField {
        TensorField::covariant(self.rank(), 2, |i| self.g[i[0]][i[1]].clone())
    }

    pub fn value_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.rank();
        let mut out = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..m {
                out[(a, b)] = self.g[a][b].eval(p).map_err(|e| Error::eval(p, e))?;
            }
        }
        Ok(out)
    }

    /// `g(s1, s2)`.
    pub fn inner(&self, s1: &TensorField, s2: &TensorField) -> Result<Expr> {
        s1.expect_section(self.rank())?;
        s2.expect_section(self.rank())?;
        let (u, v) = (s1.as_vector(), s2.as_vector());
        let m = self.rank();
        let mut terms = Vec::new();
        for a in 0..m {
            for b in 0..m {
                if !(u[a].is_zero() || v[b].is_zero() || self.g[a][b].is_zero()) {
                    terms.push(Expr::product([u[a].clone(), self.g[a][b].clone(), v[b].clone()]));
                }
            }
        }
        Ok(Expr::sum(terms))
    }

    /// The 1-form `g(s, ·)`.
    pub fn flat(&self, s: &TensorField) -> Result<TensorField> {
        s.expect_section(self.rank())?;
        let m = self.rank();
        Ok(TensorField::one_form(
            (0..m).map(|b| Expr::sum((0..m).map(|a| &s.as_vector()[a] * &self.g[a][b]))).collect(),
        ))
    }

    /// Smallest eigenvalue over the grid, required to stay above `tol_nonzero`.
    pub fn positive_definite_check(&self, grid: &SampleGrid) -> Check {
        let mut t = Tracker::nonvanishing("metric_positive_definite", grid.tol_nonzero);
        for p in grid.points() {
            match self.value_at(p) {
                Ok(g) => {
                    let l = linalg::min_eigenvalue(&g);
                    t.record(p, if l > 0.0 { l } else { 0.0 });
                }
                Err(e) => t.fail(p, e.to_string()),
            }
        }
        t.finish()
    }

    pub fn require_positive_definite(&self, grid: &SampleGrid) -> Result<()> {
        for p in grid.points() {
            let g = self.value_at(p)?;
            let l = linalg::min_eigenvalue(&g);
            if !(l > grid.tol_nonzero) {
                return Err(Error::NotPositiveDefinite { point: p.clone(), eigenvalue: l });
            }
        }
        Ok(())
    }
}

/// The Levi-Civita connection of `(E, g)`.
#[derive(Debug, Clone)]
pub struct Connection {
    algebroid: LieAlgebroid,
    metric: BundleMetric,
    /// `ρ_a(g_bc)` at flat index `(a*m + b)*m + c`.
    dg: Vec<Expr>,
}

/// Prepared tensor: the field and its anchor derivatives `ρ_a(T)`.
#[derive(Debug, Clone)]
pub struct Derivable {
    field: TensorField,
    derivs: Vec<TensorField>,
}

impl Derivable {
    pub fn field(&self) -> &TensorField {
        &self.field
    }
}

/// The connection evaluated at one point.
#[derive(Debug, Clone)]
pub struct ConnectionAt {
    pub point: Vec<f64>,
    pub rank: usize,
    /// `Γ[(a*m + b)*m + c] = (∇_{e_a} e_b)^c`.
    pub gamma: Vec<f64>,
    pub g: DMatrix<f64>,
    pub structure: Vec<f64>,
}

impl Connection {
    pub fn levi_civita(algebroid: &LieAlgebroid, metric: &BundleMetric) -> Result<Connection> {
        let m = algebroid.rank();
        if metric.rank() != m {
            return Err(Error::RankMismatch { expected: m, found: metric.rank() });
        }
        let mut dg = Vec::with_capacity(m * m * m);
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    dg.push(algebroid.anchor_derivative(a, metric.entry(b, c)));
                }
            }
        }
        Ok(Connection { algebroid: algebroid.clone(), metric: metric.clone(), dg })
    }

    pub fn algebroid(&self) -> &LieAlgebroid {
        &self.algebroid
    }

    pub fn metric(&self) -> &BundleMetric {
        &self.metric
    }

    pub fn at(&self, p: &[f64]) -> Result<ConnectionAt> {
        let m = self.algebroid.rank();
        let ev = |e: &Expr| e.eval(p).map_err(|err| Error::eval(p, err));
        let g = self.metric.value_at(p)?;
        let mut dg = Vec::with_capacity(m * m * m);
        for e in &self.dg {
            dg.push(ev(e)?);
        }
        let mut c = Vec::with_capacity(m * m * m);
        for cc in 0..m {
            for a in 0..m {
                for b in 0..m {
                    c.push(ev(self.algebroid.structure(cc, a, b))?);
                }
            }
        }
        let cs = |d: usize, a: usize, b: usize| c[(d * m + a) * m + b];
        let dgv = |a: usize, b: usize, cc: usize| dg[(a * m + b) * m + cc];
        let lu = g.clone().lu();
        let mut gamma = vec![0.0; m * m * m];
        for a in 0..m {
            for b in 0..m {
                let mut k = DVector::zeros(m);
                for cc in 0..m {
                    let mut v = dgv(a, b, cc) + dgv(b, a, cc) - dgv(cc, a, b);
                    for d in 0..m {
                        v += cs(d, a, b) * g[(d, cc)] - cs(d, a, cc) * g[(d, b)] - cs(d, b, cc) * g[(d, a)];
                    }
                    k[cc] = 0.5 * v;
                }
                let sol = lu.solve(&k).ok_or_else(|| Error::Singular {
                    point: p.to_vec(),
                    reason: "metric matrix is singular".to_string(),
                })?;
                if !linalg::max_abs_vec(&sol).is_finite() {
                    return Err(Error::Singular { point: p.to_vec(), reason: "metric matrix is singular".into() });
                }
                for d in 0..m {
                    gamma[(a * m + b) * m + d] = sol[d];
                }
            }
        }
        Ok(ConnectionAt { point: p.to_vec(), rank: m, gamma, g, structure: c })
    }

    /// Christoffel symbols `Γ^c_{ab}` at a point, flat `(a, b, c)`.
    pub fn christoffel(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.at(p)?.gamma)
    }

    pub fn prepare(&self, field: &TensorField) -> Derivable {
        let derivs = (0..self.algebroid.rank())
            .map(|a| field.map(|e| self.algebroid.anchor_derivative(a, e)))
            .collect();
        Derivable { field: field.clone(), derivs }
    }

    /// `∇_s T` at `p` for a section value `s`.
    pub fn covariant_derivative(&self, t: &TensorField, s: &[f64], p: &[f64]) -> Result<TensorValue> {
        let d = self.prepare(t);
        self.at(p)?.along(&d, s)
    }

    /// Torsion and metric-compatibility residuals over the grid.
    pub fn check(&self, grid: &SampleGrid) -> Report {
        let m = self.algebroid.rank();
        let mut report = Report::new("levi_civita", grid.len());
        let mut torsion = Tracker::vanishing("torsion", grid.tol_eq);
        let mut compat = Tracker::vanishing("metric_compatibility", grid.tol_eq);
        let g = self.prepare(&self.metric.as_tensor());
        for p in grid.points() {
            let at = match self.at(p) {
                Ok(a) => a,
                Err(e) => {
                    torsion.fail(p, e.to_string());
                    compat.fail(p, e.to_string());
                    continue;
                }
            };
            let mut r: f64 = 0.0;
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        let v = at.gamma[(a * m + b) * m + c] - at.gamma[(b * m + a) * m + c] - at.structure[(c * m + a) * m + b];
                        r = r.max(v.abs());
                    }
                }
            }
            torsion.record(p, r);
            match at.nabla(&g) {
                Ok(ng) => compat.record(p, ng.iter().map(TensorValue::max_abs).fold(0.0, f64::max)),
                Err(e) => compat.fail(p, e.to_string()),
            }
        }
        report.push(torsion.finish());
        report.push(compat.finish());
        report
    }
}

impl ConnectionAt {
    fn gamma(&self, a: usize, b: usize, c: usize) -> f64 {
        self.gamma[(a * self.rank + b) * self.rank + c]
    }

    /// `∇_{e_a} T` for every frame direction `a`.
    pub fn nabla(&self, d: &Derivable) -> Result<Vec<TensorValue>> {
        let m = self.rank;
        let p = &self.point;
        let t = d.field.eval(p).map_err(|e| Error::eval(p, e))?;
        let var = t.variance;
        let order = var.order();
        let np = var.contravariant;
        let mut out = Vec::with_capacity(m);
        for a in 0..m {
            let mut v = d.derivs[a].eval(p).map_err(|e| Error::eval(p, e))?;
            let len = v.data.len();
            for flat in 0..len {
                let idx = unflatten(m, order, flat);
                let mut acc = 0.0;
                let mut j = idx.clone();
                for slot in 0..order {
                    let orig = idx[slot];
                    for e in 0..m {
                        j[slot] = e;
                        let comp = t.data[flatten(m, &j)];
                        if comp == 0.0 {
                            continue;
                        }
                        if slot < np {
                            acc += self.gamma(a, e, orig) * comp;
                        } else {
                            acc -= self.gamma(a, orig, e) * comp;
                        }
                    }
                    j[slot] = orig;
                }
                v.data[flat] += acc;
            }
            v.variance = Variance { alternating: var.alternating, ..var };
            out.push(v);
        }
        Ok(out)
    }

    /// `∇_s T` for a section value `s`.
    pub fn along(&self, d: &Derivable, s: &[f64]) -> Result<TensorValue> {
        let all = self.nabla(d)?;
        let mut out = all[0].clone();
        out.data.iter_mut().for_each(|v| *v = 0.0);
        for (a, na) in all.iter().enumerate() {
            if s[a] == 0.0 {
                continue;
            }
            for (o, v) in out.data.iter_mut().zip(&na.data) {
                *o += s[a] * v;
            }
        }
        Ok(out)
    }

    /// `∇_u v` for section values where `v` has anchor derivatives `dv[a] = ρ_a(v)`.
    pub fn nabla_values(&self, u: &[f64], v: &[f64], dv: &[Vec<f64>]) -> Vec<f64> {
        let m = self.rank;
        let mut out = vec![0.0; m];
        for c in 0..m {
            let mut acc = 0.0;
            for a in 0..m {
                if u[a] == 0.0 {
                    continue;
                }
                acc += u[a] * dv[a][c];
                for b in 0..m {
                    acc += u[a] * v[b] * self.gamma(a, b, c);
                }
            }
            out[c] = acc;
        }
        out
    }
}

pub(crate) fn flatten(m: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, i| acc * m + i)
}

pub(crate) fn unflatten(m: usize, order: usize, mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; order];
    for slot in (0..order).rev() {
        idx[slot] = flat % m;
        flat /= m;
    }
    idx
}

/// Contraction of a numeric form with `u` in its first slot.
pub fn interior_value(u: &[f64], w: &TensorValue) -> TensorValue {
    let m = w.rank;
    let p = w.variance.covariant;
    let q = p.saturating_sub(1);
    let len = m.pow(q as u32);
    let mut data = vec![0.0; len];
    for (flat, slot) in data.iter_mut().enumerate() {
        let rest = unflatten(m, q, flat);
        let mut idx = vec![0];
        idx.extend_from_slice(&rest);
        let mut acc = 0.0;
        for a in 0..m {
            idx[0] = a;
            acc += u[a] * w.data[flatten(m, &idx)];
        }
        *slot = acc;
    }
    TensorValue { rank: m, variance: Variance::form(q), data }
}

/// Modified Gram–Schmidt on the coordinate frame, visiting seeds in `order`.
pub fn orthonormal_frame(g: &DMatrix<f64>, order: &[usize]) -> Result<Vec<DVector<f64>>> {
    let m = g.nrows();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(m);
    for &k in order {
        let mut v = DVector::zeros(m);
        v[k] = 1.0;
        for u in &out {
            let c = linalg::dot_g(g, u, &v);
            v -= u * c;
        }
        let n2 = linalg::dot_g(g, &v, &v);
        if n2 > 1e-24 {
            out.push(v / libm::sqrt(n2));
        }
    }
    if out.len() != m {
        return Err(Error::Degenerate(format!("only {} of {} orthonormal vectors found", out.len(), m)));
    }
    Ok(out)
}

/// F-adapted orthonormal frame `{s_1..s_m, F s_1..F s_m, ξ}` from numeric values.
pub fn fe_basis_values(f: &DMatrix<f64>, xi: &DVector<f64>, g: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let n = f.nrows();
    if n.is_multiple_of(2) {
        return Err(Error::EvenRank(n));
    }
    let half = n / 2;
    let mut span: Vec<DVector<f64>> = Vec::new();
    let xin = libm::sqrt(linalg::dot_g(g, xi, xi));
    if !(xin > 1e-12) {
        return Err(Error::Degenerate("ξ has zero length".into()));
    }
    span.push(xi / xin);
    let mut chosen = Vec::with_capacity(half);
    for k in 0..n {
        if chosen.len() == half {
            break;
        }
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        for _ in 0..2 {
            for u in &span {
                let c = linalg::dot_g(g, u, &v);
                v -= u * c;
            }
        }
        let n2 = linalg::dot_g(g, &v, &v);
        if n2 < 1e-24 {
            continue;
        }
        let s = v / libm::sqrt(n2);
        let fs = f * &s;
        span.push(s.clone());
        span.push(fs.clone());
        chosen.push((s, fs));
    }
    if chosen.len() != half {
        return Err(Error::Degenerate("projection fell below 1e-12 for every seed".into()));
    }
    let mut out: Vec<DVector<f64>> = chosen.iter().map(|c| c.0.clone()).collect();
    out.extend(chosen.into_iter().map(|c| c.1));
    out.push(xi.clone());
    Ok(out)
}

/// `√det g · e^1∧…∧e^m`.
pub fn volume_form(metric: &BundleMetric) -> TensorField {
    let m = metric.rank();
    let det = crate::expr::determinant(metric.matrix());
    let coef = det.sqrt();
    TensorField::form(m, m, |_| coef.clone())
}

/// `d*φ = −Σ_a ι_{u_a} ∇_{u_a} φ` over a pointwise orthonormal frame built with `order`.
pub fn codifferential_at(
    conn: &Connection,
    w: &Derivable,
    p: &[f64],
    order: &[usize],
) -> Result<TensorValue> {
    let m = conn.algebroid().rank();
    let deg = w.field().degree();
    if !w.field().variance().is_form() {
        return Err(Error::Variance("codifferential of a non-form".into()));
    }
    if deg == 0 {
        return Ok(TensorValue { rank: m, variance: Variance::SCALAR, data: vec![0.0] });
    }
    let at = conn.at(p)?;
    let frame = orthonormal_frame(&at.g, order)?;
    let all = at.nabla(w)?;
    let mut out = TensorValue { rank: m, variance: Variance::form(deg - 1), data: vec![0.0; m.pow(deg as u32 - 1)] };
    for u in &frame {
        let mut nu = all[0].clone();
        nu.data.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..m {
            for (o, v) in nu.data.iter_mut().zip(&all[a].data) {
                *o += u[a] * v;
            }
        }
        let c = interior_value(u.as_slice(), &nu);
        for (o, v) in out.data.iter_mut().zip(&c.data) {
            *o -= v;
        }
    }
    Ok(out)
}

pub fn codifferential(conn: &Connection, w: &TensorField, p: &[f64]) -> Result<TensorValue> {
    let order: Vec<usize> = (0..conn.algebroid().rank()).collect();
    codifferential_at(conn, &conn.prepare(w), p, &order)
}
