//! Direct products of Lie algebroids and the structures they induce: almost
//! contact from (almost Hermitian × almost contact), almost Hermitian from two
//! almost contact factors, and the cone complex structure with a line algebroid.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::algebroid::{arc_names, field_check, relabel, LieAlgebroid};
use crate::contact::AlmostContactStructure;
use crate::expr::Expr;
use crate::grid::SampleGrid;
use crate::linalg;
use crate::report::{Check, Report, Tracker};
use crate::riemann::BundleMetric;
use crate::tensor::{TensorField, Variance};
use crate::{Error, Result};

/// `E1 × E2` over the chart `(x, y)`: frame `e^1_1..e^1_{m1}, e^2_1..e^2_{m2}`,
/// block-diagonal anchor, vanishing mixed structure functions.
#[derive(Debug, Clone)]
pub struct ProductAlgebroid {
    algebroid: LieAlgebroid,
    first: LieAlgebroid,
    second: LieAlgebroid,
    names: Vec<Arc<str>>,
}

/// Builds `E1 × E2`; the two charts must use distinct variable names.
pub fn direct_product(e1: &LieAlgebroid, e2: &LieAlgebroid) -> Result<ProductAlgebroid> {
    if let Some(v) = e2.variables().iter().find(|v| e1.variables().contains(v)) {
        return Err(Error::Invalid(format!("chart variable `{}` appears in both factors", v)));
    }
    let variables: Vec<String> = e1.variables().iter().chain(e2.variables()).cloned().collect();
    let names = arc_names(&variables);
    let (n1, n2) = (e1.chart_dim(), e2.chart_dim());
    let (m1, m2) = (e1.rank(), e2.rank());
    let m = m1 + m2;
    let mut anchor = vec![vec![Expr::zero(); n1 + n2]; m];
    for a in 0..m1 {
        for i in 0..n1 {
            anchor[a][i] = relabel(e1.anchor(a, i), 0, &names);
        }
    }
    for a in 0..m2 {
        for i in 0..n2 {
            anchor[m1 + a][n1 + i] = relabel(e2.anchor(a, i), n1, &names);
        }
    }
    let mut structure = vec![vec![vec![Expr::zero(); m]; m]; m];
    for c in 0..m1 {
        for a in 0..m1 {
            for b in 0..m1 {
                structure[c][a][b] = relabel(e1.structure(c, a, b), 0, &names);
            }
        }
    }
    for c in 0..m2 {
        for a in 0..m2 {
            for b in 0..m2 {
                structure[m1 + c][m1 + a][m1 + b] = relabel(e2.structure(c, a, b), n1, &names);
            }
        }
    }
    let labels = e1
        .labels()
        .iter()
        .map(|l| format!("{}|1", l))
        .chain(e2.labels().iter().map(|l| format!("{}|2", l)))
        .collect();
    let algebroid = LieAlgebroid::new(variables, anchor, structure)?.with_labels(labels)?;
    Ok(ProductAlgebroid { algebroid, first: e1.clone(), second: e2.clone(), names })
}

impl ProductAlgebroid {
    pub fn algebroid(&self) -> &LieAlgebroid {
        &self.algebroid
    }

    pub fn first(&self) -> &LieAlgebroid {
        &self.first
    }

    pub fn second(&self) -> &LieAlgebroid {
        &self.second
    }

    /// A function of the first chart as a function on the product chart.
    pub fn lift_first_expr(&self, e: &Expr) -> Expr {
        relabel(e, 0, &self.names)
    }

    /// A function of the second chart as a function on the product chart.
    pub fn lift_second_expr(&self, e: &Expr) -> Expr {
        relabel(e, self.first.chart_dim(), &self.names)
    }

    fn lift(&self, t: &TensorField, offset: usize, lift: impl Fn(&Expr) -> Expr) -> TensorField {
        let k = t.rank();
        TensorField::general(self.algebroid.rank(), t.variance(), |idx| {
            if idx.iter().all(|&i| i >= offset && i < offset + k) {
                let local: Vec<usize> = idx.iter().map(|i| i - offset).collect();
                lift(t.component(&local))
            } else {
                Expr::zero()
            }
        })
    }

    /// Zero extension of a tensor of `E1`: components with an index in `E2` vanish.
    pub fn lift_first(&self, t: &TensorField) -> Result<TensorField> {
        if t.rank() != self.first.rank() {
            return Err(Error::RankMismatch { expected: self.first.rank(), found: t.rank() });
        }
        Ok(self.lift(t, 0, |e| self.lift_first_expr(e)))
    }

    /// Zero extension of a tensor of `E2`.
    pub fn lift_second(&self, t: &TensorField) -> Result<TensorField> {
        if t.rank() != self.second.rank() {
            return Err(Error::RankMismatch { expected: self.second.rank(), found: t.rank() });
        }
        Ok(self.lift(t, self.first.rank(), |e| self.lift_second_expr(e)))
    }

    /// The `E1` components of a product section (coefficients stay on the product chart).
    pub fn project_first(&self, s: &TensorField) -> Result<TensorField> {
        s.expect_section(self.algebroid.rank())?;
        Ok(TensorField::section(s.as_vector()[..self.first.rank()].to_vec()))
    }

    /// The `E2` components of a product section.
    pub fn project_second(&self, s: &TensorField) -> Result<TensorField> {
        s.expect_section(self.algebroid.rank())?;
        Ok(TensorField::section(s.as_vector()[self.first.rank()..].to_vec()))
    }

    /// `A ⊕ B` with the off-diagonal blocks filled by `off(c, b)`.
    fn block_endomorphism(
        &self,
        a: &TensorField,
        b: &TensorField,
        upper_right: impl Fn(usize, usize) -> Expr,
        lower_left: impl Fn(usize, usize) -> Expr,
    ) -> TensorField {
        let m1 = self.first.rank();
        TensorField::endomorphism(self.algebroid.rank(), |c, k| match (c < m1, k < m1) {
            (true, true) => self.lift_first_expr(a.matrix_entry(c, k)),
            (false, false) => self.lift_second_expr(b.matrix_entry(c - m1, k - m1)),
            (true, false) => upper_right(c, k - m1),
            (false, true) => lower_left(c - m1, k),
        })
    }

    /// `g1 ⊕ g2`.
    pub fn block_metric(&self, g1: &BundleMetric, g2: &BundleMetric) -> Result<BundleMetric> {
        let m1 = self.first.rank();
        if g1.rank() != m1 {
            return Err(Error::RankMismatch { expected: m1, found: g1.rank() });
        }
        if g2.rank() != self.second.rank() {
            return Err(Error::RankMismatch { expected: self.second.rank(), found: g2.rank() });
        }
        Ok(BundleMetric::from_upper(self.algebroid.rank(), |a, b| match (a < m1, b < m1) {
            (true, true) => self.lift_first_expr(g1.entry(a, b)),
            (false, false) => self.lift_second_expr(g2.entry(a - m1, b - m1)),
            _ => Expr::zero(),
        }))
    }
}

/// An endomorphism `J` of an even-rank algebroid meant to satisfy `J² = −I`,
/// optionally with a metric meant to be `J`-invariant.
#[derive(Debug, Clone)]
pub struct AlmostComplexStructure {
    algebroid: LieAlgebroid,
    j: TensorField,
    metric: Option<BundleMetric>,
}

impl AlmostComplexStructure {
    pub fn new(algebroid: &LieAlgebroid, j: TensorField) -> Result<Self> {
        let m = algebroid.rank();
        if m % 2 == 1 {
            return Err(Error::Invalid(format!("odd rank {}: an almost complex structure needs even rank", m)));
        }
        j.expect(Variance::ENDOMORPHISM)?;
        if j.rank() != m {
            return Err(Error::RankMismatch { expected: m, found: j.rank() });
        }
        Ok(AlmostComplexStructure { algebroid: algebroid.clone(), j, metric: None })
    }

    /// From `J^c_b = j[c][b]`.
    pub fn from_components(algebroid: &LieAlgebroid, j: &[Vec<Expr>]) -> Result<Self> {
        AlmostComplexStructure::new(algebroid, TensorField::from_matrix(j)?)
    }

    pub fn with_metric(mut self, metric: BundleMetric) -> Result<Self> {
        if metric.rank() != self.algebroid.rank() {
            return Err(Error::RankMismatch { expected: self.algebroid.rank(), found: metric.rank() });
        }
        self.metric = Some(metric);
        Ok(self)
    }

    pub fn algebroid(&self) -> &LieAlgebroid {
        &self.algebroid
    }

    pub fn j(&self) -> &TensorField {
        &self.j
    }

    pub fn metric(&self) -> Option<&BundleMetric> {
        self.metric.as_ref()
    }

    /// `J² + I` and, with a metric, `g(J·, J·) − g` and positivity of `g`.
    pub fn check(&self, grid: &SampleGrid) -> Report {
        let m = self.algebroid.rank();
        let mut report = Report::new("almost_complex", grid.len());
        let mut square = Tracker::vanishing("j_squared", grid.tol_eq);
        let mut compat = Tracker::vanishing("compatibility", grid.tol_eq);
        for p in grid.points() {
            let j = match self.j.eval(p) {
                Ok(v) => v.matrix(),
                Err(e) => {
                    square.fail(p, e.to_string());
                    compat.fail(p, e.to_string());
                    continue;
                }
            };
            square.record(p, linalg::max_abs(&(&j * &j + nalgebra::DMatrix::identity(m, m))));
            if let Some(g) = &self.metric {
                match g.value_at(p) {
                    Ok(g) => compat.record(p, linalg::max_abs(&(j.transpose() * &g * &j - &g))),
                    Err(e) => compat.fail(p, e.to_string()),
                }
            }
        }
        report.push(square.finish());
        if let Some(g) = &self.metric {
            report.push(compat.finish());
            report.push(g.positive_definite_check(grid));
        }
        report
    }

    /// Components of the Nijenhuis torsion `N_J` over the grid.
    pub fn nijenhuis_check(&self, grid: &SampleGrid) -> Result<Check> {
        let n = self.algebroid.nijenhuis(&self.j)?;
        Ok(field_check(grid, "nijenhuis", &n, grid.tol_eq))
    }

    /// [`check`](Self::check) followed by the Nijenhuis check.
    pub fn hermitian_report(&self, grid: &SampleGrid) -> Result<Report> {
        let mut report = self.check(grid);
        report.title = "hermitian".to_string();
        report.push(self.nijenhuis_check(grid)?);
        Ok(report)
    }
}

fn require_metric<'a>(metric: Option<&'a BundleMetric>, what: &str) -> Result<&'a BundleMetric> {
    metric.ok_or_else(|| Error::Invalid(format!("{} needs a metric", what)))
}

/// `(J ⊕ F2, 0 ⊕ ξ2, 0 ⊕ η2, g1 ⊕ g2)` on `E1 × E2`.
pub fn product_acr(h1: &AlmostComplexStructure, acr2: &AlmostContactStructure) -> Result<(ProductAlgebroid, AlmostContactStructure)> {
    let g1 = require_metric(h1.metric(), "the almost Hermitian factor")?;
    let g2 = require_metric(acr2.metric(), "the almost contact factor")?;
    let prod = direct_product(h1.algebroid(), acr2.algebroid())?;
    let f = prod.block_endomorphism(h1.j(), acr2.f(), |_, _| Expr::zero(), |_, _| Expr::zero());
    let xi = prod.lift_second(acr2.xi())?;
    let eta = prod.lift_second(acr2.eta())?;
    let g = prod.block_metric(g1, g2)?;
    let acs = AlmostContactStructure::new(prod.algebroid(), f, xi, eta)?.with_metric(g)?;
    Ok((prod, acs))
}

/// `J(s1 ⊕ s2) = (F1 s1 − η2(s2) ξ1) ⊕ (F2 s2 + η1(s1) ξ2)` on `E1 × E2`, with
/// `g1 ⊕ g2` when both factors carry a metric.
pub fn product_hermitian(acr1: &AlmostContactStructure, acr2: &AlmostContactStructure) -> Result<(ProductAlgebroid, AlmostComplexStructure)> {
    let prod = direct_product(acr1.algebroid(), acr2.algebroid())?;
    let (xi1, eta1) = (acr1.xi().as_vector(), acr1.eta().as_vector());
    let (xi2, eta2) = (acr2.xi().as_vector(), acr2.eta().as_vector());
    let j = prod.block_endomorphism(
        acr1.f(),
        acr2.f(),
        |c, b| -(prod.lift_first_expr(&xi1[c]) * prod.lift_second_expr(&eta2[b])),
        |c, b| prod.lift_second_expr(&xi2[c]) * prod.lift_first_expr(&eta1[b]),
    );
    let mut h = AlmostComplexStructure::new(prod.algebroid(), j)?;
    if let (Some(g1), Some(g2)) = (acr1.metric(), acr2.metric()) {
        h = h.with_metric(prod.block_metric(g1, g2)?)?;
    }
    Ok((prod, h))
}

/// `J̃(s ⊕ f s_L) = (F s − f ξ) ⊕ η(s) s_L` on `E × L`, with `g ⊕ 1` when `E`
/// carries a metric.
pub fn cone_complex_structure(acr: &AlmostContactStructure, line: &LieAlgebroid) -> Result<(ProductAlgebroid, AlmostComplexStructure)> {
    if line.rank() != 1 {
        return Err(Error::Invalid(format!("the line factor must have rank 1, found {}", line.rank())));
    }
    let prod = direct_product(acr.algebroid(), line)?;
    let (xi, eta) = (acr.xi().as_vector(), acr.eta().as_vector());
    let zero = TensorField::zero(1, Variance::ENDOMORPHISM);
    let j = prod.block_endomorphism(acr.f(), &zero, |c, _| -prod.lift_first_expr(&xi[c]), |_, b| prod.lift_first_expr(&eta[b]));
    let mut h = AlmostComplexStructure::new(prod.algebroid(), j)?;
    if let Some(g) = acr.metric() {
        h = h.with_metric(prod.block_metric(g, &BundleMetric::euclidean(1))?)?;
    }
    Ok((prod, h))
}
