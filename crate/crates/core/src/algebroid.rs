//! Lie algebroids over one chart and their Cartan calculus.
//!
//! A frame `e_1..e_m` of sections is fixed; the algebroid is determined by the
//! anchor components `ρ_a^i(x)` and structure functions `C^c_{ab}(x)` with
//! `[e_a, e_b] = C^c_{ab} e_c`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::expr::Expr;
use crate::grid::SampleGrid;
use crate::report::{Check, Report, Tracker};
use crate::tensor::{combinations, TensorField, Variance};
use crate::{Error, Result};

/// Normalization of the exterior derivative on forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Convention {
    /// `d` exactly as the invariant formula, no normalization.
    #[default]
    Plain,
    /// `d` on `p`-forms divided by `p + 1` (so `1/2` on 1-forms).
    Half,
}

impl Convention {
    /// Factor multiplying the plain derivative of a `degree`-form.
    pub fn factor(self, degree: usize) -> f64 {
        match self {
            Convention::Plain => 1.0,
            Convention::Half => 1.0 / (degree as f64 + 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Convention::Plain => "plain",
            Convention::Half => "half",
        }
    }
}

impl core::str::FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Convention> {
        match s {
            "plain" => Ok(Convention::Plain),
            "half" => Ok(Convention::Half),
            other => Err(Error::Invalid(format!("unknown convention `{}` (expected plain or half)", other))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LieAlgebroid {
    variables: Vec<String>,
    rank: usize,
    anchor: Vec<Vec<Expr>>,
    structure: Vec<Expr>,
    labels: Vec<String>,
}

/// Probe points used to confirm skew-symmetry of user-supplied structure functions.
fn probe_points(n: usize) -> Vec<Vec<f64>> {
    crate::grid::halton_points(n, 8, 0x5eed).into_iter().map(|u| u.iter().map(|v| 1.6 * v - 0.8).collect()).collect()
}

impl LieAlgebroid {
    /// `anchor[a][i] = ρ_a^i`, `structure[c][a][b] = C^c_{ab}`.
    ///
    /// Only the entries with `a < b` are kept; the others must be their negatives
    /// (checked structurally, then numerically at probe points).
    pub fn new(variables: Vec<String>, anchor: Vec<Vec<Expr>>, structure: Vec<Vec<Vec<Expr>>>) -> Result<LieAlgebroid> {
        let m = anchor.len();
        let n = variables.len();
        check_distinct(&variables)?;
        if let Some(row) = anchor.iter().find(|r| r.len() != n) {
            return Err(Error::RankMismatch { expected: n, found: row.len() });
        }
        if structure.len() != m || structure.iter().any(|p| p.len() != m || p.iter().any(|r| r.len() != m)) {
            return Err(Error::Invalid(format!("structure functions must form an {}x{}x{} array", m, m, m)));
        }
        let probes = probe_points(n);
        let mut flat = vec![Expr::zero(); m * m * m];
        for c in 0..m {
            for a in 0..m {
                for b in 0..m {
                    let ab = &structure[c][a][b];
                    let ba = &structure[c][b][a];
                    let agrees = if a == b {
                        ab.is_zero() || numerically_equal(ab, &Expr::zero(), &probes)
                    } else {
                        -ab == *ba || (ab.is_zero() && ba.is_zero()) || numerically_equal(&-ab, ba, &probes)
                    };
                    if !agrees {
                        return Err(Error::NotSkew { a, b, c });
                    }
                    if a < b {
                        flat[(c * m + a) * m + b] = ab.clone();
                        flat[(c * m + b) * m + a] = -ab;
                    }
                }
            }
        }
        let labels = (1..=m).map(|a| format!("e_{}", a)).collect();
        Ok(LieAlgebroid { variables, rank: m, anchor, structure: flat, labels })
    }

    /// Builds from `C^c_{ab}` given for `a < b` only.
    pub fn from_brackets(
        variables: Vec<String>,
        anchor: Vec<Vec<Expr>>,
        mut upper: impl FnMut(usize, usize, usize) -> Expr,
    ) -> Result<LieAlgebroid> {
        let m = anchor.len();
        let mut s = vec![vec![vec![Expr::zero(); m]; m]; m];
        for c in 0..m {
            for a in 0..m {
                for b in a + 1..m {
                    let v = upper(c, a, b);
                    s[c][b][a] = -&v;
                    s[c][a][b] = v;
                }
            }
        }
        LieAlgebroid::new(variables, anchor, s)
    }

    /// Tangent algebroid of a chart: identity anchor, coordinate frame.
    pub fn tangent(variables: Vec<String>) -> LieAlgebroid {
        let n = variables.len();
        let anchor =
            (0..n).map(|a| (0..n).map(|i| if a == i { Expr::one() } else { Expr::zero() }).collect()).collect();
        LieAlgebroid::from_brackets(variables, anchor, |_, _, _| Expr::zero()).expect("tangent algebroid")
    }

    /// The same algebroid over renamed chart variables; indices are unchanged.
    pub fn renamed(&self, variables: Vec<String>) -> Result<LieAlgebroid> {
        if variables.len() != self.chart_dim() {
            return Err(Error::RankMismatch { expected: self.chart_dim(), found: variables.len() });
        }
        check_distinct(&variables)?;
        let names = arc_names(&variables);
        let map = |e: &Expr| relabel(e, 0, &names);
        Ok(LieAlgebroid {
            anchor: self.anchor.iter().map(|r| r.iter().map(map).collect()).collect(),
            structure: self.structure.iter().map(map).collect(),
            variables,
            rank: self.rank,
            labels: self.labels.clone(),
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<LieAlgebroid> {
        if labels.len() != self.rank {
            return Err(Error::RankMismatch { expected: self.rank, found: labels.len() });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn chart_dim(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn variable_names(&self) -> Vec<&str> {
        self.variables.iter().map(String::as_str).collect()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn anchor(&self, a: usize, i: usize) -> &Expr {
        &self.anchor[a][i]
    }

    pub fn structure(&self, c: usize, a: usize, b: usize) -> &Expr {
        &self.structure[(c * self.rank + a) * self.rank + b]
    }

    /// The coordinate function `x^i` as an expression.
    pub fn coordinate(&self, i: usize) -> Expr {
        Expr::var(i, &self.variables[i])
    }

    /// Parses an expression over this chart's variables.
    pub fn parse(&self, text: &str) -> Result<Expr> {
        Ok(crate::expr::parse(text, &self.variable_names())?)
    }

    /// `ρ(e_a)(f) = ρ_a^i ∂_i f`.
    pub fn anchor_derivative(&self, a: usize, f: &Expr) -> Expr {
        Expr::sum(
            self.anchor[a]
                .iter()
                .enumerate()
                .filter(|(_, r)| !r.is_zero())
                .map(|(i, r)| r * f.derivative(i)),
        )
    }

    /// `ρ(s)(f)` for section components `s`.
    pub fn derive_along(&self, s: &[Expr], f: &Expr) -> Expr {
        Expr::sum(
            s.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(a, c)| c * self.anchor_derivative(a, f)),
        )
    }

    pub fn anchor_apply(&self, s: &TensorField, f: &TensorField) -> Result<TensorField> {
        s.expect_section(self.rank)?;
        f.expect(Variance::SCALAR)?;
        Ok(TensorField::scalar(self.rank, self.derive_along(s.as_vector(), f.as_scalar())))
    }

    /// The vector field `ρ(s)` as components over the coordinate fields.
    pub fn anchor_vector(&self, s: &TensorField) -> Result<Vec<Expr>> {
        s.expect_section(self.rank)?;
        Ok((0..self.chart_dim())
            .map(|i| Expr::sum((0..self.rank).map(|a| &s.as_vector()[a] * &self.anchor[a][i])))
            .collect())
    }

    fn bracket_components(&self, s: &[Expr], t: &[Expr]) -> Vec<Expr> {
        let m = self.rank;
        (0..m)
            .map(|c| {
                let mut terms = Vec::new();
                for a in 0..m {
                    if s[a].is_zero() {
                        continue;
                    }
                    for b in 0..m {
                        let cab = self.structure(c, a, b);
                        if !cab.is_zero() && !t[b].is_zero() {
                            terms.push(Expr::product([s[a].clone(), t[b].clone(), cab.clone()]));
                        }
                    }
                    terms.push(&s[a] * self.anchor_derivative(a, &t[c]));
                }
                for b in 0..m {
                    if !t[b].is_zero() {
                        terms.push(-(&t[b] * self.anchor_derivative(b, &s[c])));
                    }
                }
                Expr::sum(terms)
            })
            .collect()
    }

    /// `[s, t]` extended from the frame by the Leibniz rule.
    pub fn bracket(&self, s: &TensorField, t: &TensorField) -> Result<TensorField> {
        s.expect_section(self.rank)?;
        t.expect_section(self.rank)?;
        Ok(TensorField::section(self.bracket_components(s.as_vector(), t.as_vector())))
    }

    /// Plain exterior derivative (invariant formula, no normalization).
    pub fn exterior_derivative(&self, w: &TensorField) -> Result<TensorField> {
        w.expect_form(self.rank)?;
        let m = self.rank;
        let p = w.degree();
        if p == 0 {
            let f = w.as_scalar();
            return Ok(TensorField::one_form((0..m).map(|a| self.anchor_derivative(a, f)).collect()));
        }
        if p + 1 > m {
            return Ok(TensorField::zero(m, Variance::form(p + 1)));
        }
        Ok(TensorField::form(m, p + 1, |idx| {
            let mut terms = Vec::new();
            for k in 0..=p {
                let rest: Vec<usize> = idx.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, v)| *v).collect();
                let inner = w.component(&rest);
                if inner.is_zero() {
                    continue;
                }
                let d = self.anchor_derivative(idx[k], inner);
                terms.push(if k % 2 == 0 { d } else { -d });
            }
            for k in 0..=p {
                for l in k + 1..=p {
                    let rest: Vec<usize> =
                        idx.iter().enumerate().filter(|(j, _)| *j != k && *j != l).map(|(_, v)| *v).collect();
                    let mut slot = Vec::with_capacity(p);
                    for c in 0..m {
                        let cc = self.structure(c, idx[k], idx[l]);
                        if cc.is_zero() {
                            continue;
                        }
                        slot.clear();
                        slot.push(c);
                        slot.extend_from_slice(&rest);
                        let wc = w.component(&slot);
                        if wc.is_zero() {
                            continue;
                        }
                        let t = cc * wc;
                        terms.push(if (k + l) % 2 == 0 { t } else { -t });
                    }
                }
            }
            Expr::sum(terms)
        }))
    }

    /// Exterior derivative under a normalization convention.
    pub fn exterior_derivative_with(&self, w: &TensorField, convention: Convention) -> Result<TensorField> {
        let d = self.exterior_derivative(w)?;
        let k = convention.factor(w.degree());
        Ok(if k == 1.0 { d } else { d.scale_const(k) })
    }

    /// Contraction into the first slot of `w`.
    pub fn interior_product(&self, s: &TensorField, w: &TensorField) -> Result<TensorField> {
        s.expect_section(self.rank)?;
        w.expect_form(self.rank)?;
        let p = w.degree();
        if p == 0 {
            return Err(Error::Variance("interior product of a function".into()));
        }
        let m = self.rank;
        let sv = s.as_vector();
        let mut slot = vec![0; p];
        Ok(TensorField::form(m, p - 1, |idx| {
            slot[1..].copy_from_slice(idx);
            Expr::sum((0..m).filter(|a| !sv[*a].is_zero()).map(|a| {
                slot[0] = a;
                &sv[a] * w.component(&slot)
            }))
        }))
    }

    /// Lie derivative of an arbitrary tensor field along `s`.
    pub fn lie_derivative(&self, s: &TensorField, t: &TensorField) -> Result<TensorField> {
        s.expect_section(self.rank)?;
        if t.rank() != self.rank {
            return Err(Error::RankMismatch { expected: self.rank, found: t.rank() });
        }
        let m = self.rank;
        let sv = s.as_vector();
        // M^c_b = [s, e_b]^c
        let mcols: Vec<Vec<Expr>> = (0..m)
            .map(|b| {
                let e = TensorField::frame_section(m, b);
                self.bracket_components(sv, e.as_vector())
            })
            .collect();
        let var = t.variance();
        let p = var.contravariant;
        let order = var.order();
        Ok(TensorField::general(m, var, |idx| {
            let mut terms = vec![self.derive_along(sv, t.component(idx))];
            let mut j = idx.to_vec();
            for slot in 0..order {
                let orig = idx[slot];
                for d in 0..m {
                    let coef = if slot < p { &mcols[d][orig] } else { &mcols[orig][d] };
                    if coef.is_zero() {
                        continue;
                    }
                    j[slot] = d;
                    let comp = t.component(&j);
                    if !comp.is_zero() {
                        let term = coef * comp;
                        terms.push(if slot < p { term } else { -term });
                    }
                }
                j[slot] = orig;
            }
            Expr::sum(terms)
        }))
    }

    /// Nijenhuis torsion `N_A(s1,s2) = [As1,As2] − A[As1,s2] − A[s1,As2] + A²[s1,s2]`.
    pub fn nijenhuis(&self, a: &TensorField) -> Result<TensorField> {
        a.expect(Variance::ENDOMORPHISM)?;
        let m = self.rank;
        let cols: Vec<TensorField> = (0..m).map(|b| a.apply(&TensorField::frame_section(m, b)).unwrap()).collect();
        let mut values = vec![Vec::new(); m * m];
        for p in combinations(m, 2) {
            let (i, j) = (p[0], p[1]);
            let ei = TensorField::frame_section(m, i);
            let ej = TensorField::frame_section(m, j);
            values[i * m + j] = self.nijenhuis_on(a, &cols[i], &cols[j], &ei, &ej)?.as_vector().to_vec();
        }
        Ok(TensorField::vector_valued_form(m, 1, 2, |idx| values[idx[1] * m + idx[2]][idx[0]].clone()))
    }

    fn nijenhuis_on(
        &self,
        a: &TensorField,
        as1: &TensorField,
        as2: &TensorField,
        s1: &TensorField,
        s2: &TensorField,
    ) -> Result<TensorField> {
        let t1 = self.bracket(as1, as2)?;
        let t2 = a.apply(&self.bracket(as1, s2)?)?;
        let t3 = a.apply(&self.bracket(s1, as2)?)?;
        let t4 = a.apply(&a.apply(&self.bracket(s1, s2)?)?)?;
        t1.sub(&t2)?.sub(&t3)?.add(&t4)
    }

    /// `N_A(s1, s2)` for arbitrary sections.
    pub fn nijenhuis_sections(&self, a: &TensorField, s1: &TensorField, s2: &TensorField) -> Result<TensorField> {
        let as1 = a.apply(s1)?;
        let as2 = a.apply(s2)?;
        self.nijenhuis_on(a, &as1, &as2, s1, s2)
    }

    /// Jacobi identity, anchor morphism and skew-symmetry on the grid.
    pub fn validate(&self, grid: &SampleGrid) -> Report {
        let m = self.rank;
        let n = self.chart_dim();
        let mut report = Report::new("algebroid", grid.len());
        let mut jacobi = Vec::new();
        for t in combinations(m, 3) {
            let e: Vec<Vec<Expr>> = t.iter().map(|a| TensorField::frame_section(m, *a).as_vector().to_vec()).collect();
            let cyc = |x: &[Expr], y: &[Expr], z: &[Expr]| self.bracket_components(&self.bracket_components(x, y), z);
            let j1 = cyc(&e[0], &e[1], &e[2]);
            let j2 = cyc(&e[1], &e[2], &e[0]);
            let j3 = cyc(&e[2], &e[0], &e[1]);
            for c in 0..m {
                jacobi.push(Expr::sum([j1[c].clone(), j2[c].clone(), j3[c].clone()]));
            }
        }
        report.push(vanishing_check(grid, "jacobi", &jacobi, grid.tol_eq));
        let mut morphism = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                for i in 0..n {
                    let lhs = Expr::sum((0..m).map(|c| self.structure(c, a, b) * &self.anchor[c][i]));
                    let rhs = self.anchor_derivative(a, &self.anchor[b][i]) - self.anchor_derivative(b, &self.anchor[a][i]);
                    morphism.push(lhs - rhs);
                }
            }
        }
        report.push(vanishing_check(grid, "anchor_morphism", &morphism, grid.tol_eq));
        let mut skew = Vec::new();
        for c in 0..m {
            for a in 0..m {
                for b in a..m {
                    skew.push(self.structure(c, a, b) + self.structure(c, b, a));
                }
            }
        }
        report.push(vanishing_check(grid, "structure_skew", &skew, grid.tol_eq));
        report
    }
}

fn check_distinct(variables: &[String]) -> Result<()> {
    for (k, v) in variables.iter().enumerate() {
        if variables[..k].contains(v) {
            return Err(Error::Invalid(format!("duplicate chart variable `{}`", v)));
        }
    }
    Ok(())
}

pub(crate) fn arc_names(variables: &[String]) -> Vec<Arc<str>> {
    variables.iter().map(|v| Arc::from(v.as_str())).collect()
}

/// Moves variable `i` to index `i + offset`, named after `names[i + offset]`.
pub(crate) fn relabel(e: &Expr, offset: usize, names: &[Arc<str>]) -> Expr {
    e.remap_vars(&|i| (i + offset, names[i + offset].clone()))
}

fn numerically_equal(a: &Expr, b: &Expr, probes: &[Vec<f64>]) -> bool {
    probes.iter().all(|p| match (a.eval(p), b.eval(p)) {
        (Ok(x), Ok(y)) => (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs())),
        (Err(_), Err(_)) => true,
        _ => false,
    })
}

/// Max over the grid of `|e(p)|` for every expression in `exprs`.
pub fn vanishing_check(grid: &SampleGrid, name: &str, exprs: &[Expr], tol: f64) -> Check {
    let mut t = Tracker::vanishing(name, tol);
    for p in grid.points() {
        let mut worst: f64 = 0.0;
        for e in exprs {
            match e.eval(p) {
                Ok(v) => worst = worst.max(v.abs()),
                Err(err) => {
                    t.fail(p, err.to_string());
                    break;
                }
            }
        }
        t.record(p, worst);
    }
    t.finish()
}

/// Max over the grid of every component of `field`.
pub fn field_check(grid: &SampleGrid, name: &str, field: &TensorField, tol: f64) -> Check {
    vanishing_check(grid, name, field.components(), tol)
}
