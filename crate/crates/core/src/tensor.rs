//! Tensor fields over an algebroid frame, symbolic and evaluated.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::expr::{EvalError, Expr};
use crate::{Error, Result};

/// `contravariant` upper slots followed by `covariant` lower slots. If
/// `alternating` is set the covariant block is antisymmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variance {
    pub contravariant: usize,
    pub covariant: usize,
    pub alternating: bool,
}

impl Variance {
    pub const SCALAR: Variance = Variance { contravariant: 0, covariant: 0, alternating: true };
    pub const SECTION: Variance = Variance { contravariant: 1, covariant: 0, alternating: true };
    pub const ENDOMORPHISM: Variance = Variance { contravariant: 1, covariant: 1, alternating: true };

    pub fn form(degree: usize) -> Variance {
        Variance { contravariant: 0, covariant: degree, alternating: true }
    }

    pub fn covariant(degree: usize) -> Variance {
        Variance { contravariant: 0, covariant: degree, alternating: degree <= 1 }
    }

    pub fn order(&self) -> usize {
        self.contravariant + self.covariant
    }

    pub fn is_form(&self) -> bool {
        self.contravariant == 0 && self.alternating
    }
}

/// Increasing `k`-subsets of `0..n`.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        while i > 0 && c[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        c[i - 1] += 1;
        for j in i..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Sign of the permutation sorting `idx`, and the sorted indices; sign 0 on repeats.
pub fn sort_sign(idx: &[usize]) -> (i32, Vec<usize>) {
    let mut v = idx.to_vec();
    let mut sign = 1;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        sign = 0;
    }
    (sign, v)
}

fn flat_index(rank: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, i| acc * rank + i)
}

fn multi_index(rank: usize, order: usize, mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; order];
    for slot in (0..order).rev() {
        idx[slot] = flat % rank.max(1);
        flat /= rank.max(1);
    }
    idx
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    rank: usize,
    variance: Variance,
    components: Vec<Expr>,
}

impl TensorField {
    /// Dense constructor; `components` are in row-major order over all slots.
    pub fn from_components(rank: usize, variance: Variance, components: Vec<Expr>) -> Result<TensorField> {
        let expected = rank.pow(variance.order() as u32);
        if components.len() != expected {
            return Err(Error::RankMismatch { expected, found: components.len() });
        }
        Ok(TensorField { rank, variance, components })
    }

    pub fn zero(rank: usize, variance: Variance) -> TensorField {
        TensorField { rank, variance, components: vec![Expr::zero(); rank.pow(variance.order() as u32)] }
    }

    pub fn scalar(rank: usize, f: Expr) -> TensorField {
        TensorField { rank, variance: Variance::SCALAR, components: vec![f] }
    }

    pub fn section(components: Vec<Expr>) -> TensorField {
        TensorField { rank: components.len(), variance: Variance::SECTION, components }
    }

    /// The frame section `e_a`.
    pub fn frame_section(rank: usize, a: usize) -> TensorField {
        TensorField::section((0..rank).map(|b| if a == b { Expr::one() } else { Expr::zero() }).collect())
    }

    pub fn one_form(components: Vec<Expr>) -> TensorField {
        TensorField { rank: components.len(), variance: Variance::form(1), components }
    }

    /// The dual frame form `e^a`.
    pub fn dual_frame_form(rank: usize, a: usize) -> TensorField {
        TensorField::one_form((0..rank).map(|b| if a == b { Expr::one() } else { Expr::zero() }).collect())
    }

    /// A `degree`-form from its values on increasing index tuples.
    pub fn form(rank: usize, degree: usize, canonical: impl FnMut(&[usize]) -> Expr) -> TensorField {
        TensorField::vector_valued_form(rank, 0, degree, canonical)
    }

    /// A form with `contravariant` leading vector slots; `f` receives the
    /// contravariant indices followed by an increasing covariant tuple.
    pub fn vector_valued_form(
        rank: usize,
        contravariant: usize,
        degree: usize,
        mut f: impl FnMut(&[usize]) -> Expr,
    ) -> TensorField {
        let variance = Variance { contravariant, covariant: degree, alternating: true };
        let order = variance.order();
        let total = rank.pow(order as u32);
        let mut components = vec![Expr::zero(); total];
        if degree > rank {
            return TensorField { rank, variance, components };
        }
        let mut canonical: Vec<Option<Expr>> = vec![None; total];
        for (flat, slot) in components.iter_mut().enumerate() {
            let idx = multi_index(rank, order, flat);
            let (sign, sorted) = sort_sign(&idx[contravariant..]);
            if sign == 0 {
                continue;
            }
            let mut key = idx[..contravariant].to_vec();
            key.extend_from_slice(&sorted);
            let kf = flat_index(rank, &key);
            if canonical[kf].is_none() {
                canonical[kf] = Some(f(&key));
            }
            let v = canonical[kf].as_ref().unwrap();
            *slot = if sign > 0 { v.clone() } else { -v };
        }
        TensorField { rank, variance, components }
    }

    /// A general (non-alternating) covariant tensor, e.g. a metric.
    pub fn covariant(rank: usize, degree: usize, mut f: impl FnMut(&[usize]) -> Expr) -> TensorField {
        let variance = Variance::covariant(degree);
        let components = (0..rank.pow(degree as u32)).map(|k| f(&multi_index(rank, degree, k))).collect();
        TensorField { rank, variance, components }
    }

    /// General tensor from a component function over all index tuples.
    pub fn general(rank: usize, variance: Variance, mut f: impl FnMut(&[usize]) -> Expr) -> TensorField {
        let order = variance.order();
        let components = (0..rank.pow(order as u32)).map(|k| f(&multi_index(rank, order, k))).collect();
        TensorField { rank, variance, components }
    }

    /// A (1,1)-tensor `A^c_b` with `f(c, b)`.
    pub fn endomorphism(rank: usize, mut f: impl FnMut(usize, usize) -> Expr) -> TensorField {
        TensorField::general(rank, Variance::ENDOMORPHISM, |i| f(i[0], i[1]))
    }

    pub fn from_matrix(matrix: &[Vec<Expr>]) -> Result<TensorField> {
        let rank = matrix.len();
        if let Some(row) = matrix.iter().find(|r| r.len() != rank) {
            return Err(Error::RankMismatch { expected: rank, found: row.len() });
        }
        Ok(TensorField::endomorphism(rank, |c, b| matrix[c][b].clone()))
    }

    pub fn identity(rank: usize) -> TensorField {
        TensorField::endomorphism(rank, |c, b| if c == b { Expr::one() } else { Expr::zero() })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn variance(&self) -> Variance {
        self.variance
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, idx: &[usize]) -> &Expr {
        &self.components[flat_index(self.rank, idx)]
    }

    /// Degree of a form.
    pub fn degree(&self) -> usize {
        self.variance.covariant
    }

    /// Scalar value of a degree-0 field.
    pub fn as_scalar(&self) -> &Expr {
        &self.components[0]
    }

    pub fn as_vector(&self) -> &[Expr] {
        &self.components
    }

    pub fn matrix_entry(&self, c: usize, b: usize) -> &Expr {
        &self.components[c * self.rank + b]
    }

    pub fn eval(&self, point: &[f64]) -> core::result::Result<TensorValue, EvalError> {
        let data = self.components.iter().map(|e| e.eval(point)).collect::<core::result::Result<_, _>>()?;
        Ok(TensorValue { rank: self.rank, variance: self.variance, data })
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> TensorField {
        TensorField { rank: self.rank, variance: self.variance, components: self.components.iter().map(f).collect() }
    }

    fn same_shape(&self, other: &TensorField) -> Result<()> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch { expected: self.rank, found: other.rank });
        }
        if self.variance.order() != other.variance.order() || self.variance.contravariant != other.variance.contravariant {
            return Err(Error::Variance(format!("{:?} vs {:?}", self.variance, other.variance)));
        }
        Ok(())
    }

    pub fn add(&self, other: &TensorField) -> Result<TensorField> {
        self.same_shape(other)?;
        let variance = Variance { alternating: self.variance.alternating && other.variance.alternating, ..self.variance };
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect();
        Ok(TensorField { rank: self.rank, variance, components })
    }

    pub fn sub(&self, other: &TensorField) -> Result<TensorField> {
        self.add(&other.scale_const(-1.0))
    }

    pub fn scale(&self, f: &Expr) -> TensorField {
        self.map(|e| f * e)
    }

    pub fn scale_const(&self, c: f64) -> TensorField {
        self.map(|e| e * c)
    }

    /// `A(s)^c = A^c_b s^b` for a (1,1)-tensor applied to a section.
    pub fn apply(&self, s: &TensorField) -> Result<TensorField> {
        self.expect(Variance::ENDOMORPHISM)?;
        s.expect_section(self.rank)?;
        let m = self.rank;
        Ok(TensorField::section(
            (0..m).map(|c| Expr::sum((0..m).map(|b| self.matrix_entry(c, b) * &s.components[b]))).collect(),
        ))
    }

    /// Composition `self ∘ other` of (1,1)-tensors.
    pub fn compose(&self, other: &TensorField) -> Result<TensorField> {
        self.expect(Variance::ENDOMORPHISM)?;
        other.expect(Variance::ENDOMORPHISM)?;
        let m = self.rank;
        Ok(TensorField::endomorphism(m, |c, b| {
            Expr::sum((0..m).map(|k| self.matrix_entry(c, k) * other.matrix_entry(k, b)))
        }))
    }

    /// Pullback `ω∘A` of a 1-form by a (1,1)-tensor.
    pub fn pullback_one_form(&self, a: &TensorField) -> Result<TensorField> {
        a.expect(Variance::ENDOMORPHISM)?;
        if self.variance.order() != 1 || self.variance.covariant != 1 {
            return Err(Error::Variance("expected a 1-form".into()));
        }
        let m = self.rank;
        Ok(TensorField::one_form(
            (0..m).map(|b| Expr::sum((0..m).map(|c| &self.components[c] * a.matrix_entry(c, b)))).collect(),
        ))
    }

    /// Full contraction of the covariant slots with `sections`.
    pub fn evaluate_on(&self, sections: &[&TensorField]) -> Result<TensorField> {
        if sections.len() != self.variance.covariant {
            return Err(Error::Variance(format!(
                "{} arguments for {} covariant slots",
                sections.len(),
                self.variance.covariant
            )));
        }
        for s in sections {
            s.expect_section(self.rank)?;
        }
        let m = self.rank;
        let q = self.variance.covariant;
        let p = self.variance.contravariant;
        let mut out = Vec::with_capacity(m.pow(p as u32));
        for head in 0..m.pow(p as u32) {
            let mut terms = Vec::new();
            for tail in 0..m.pow(q as u32) {
                let comp = &self.components[head * m.pow(q as u32) + tail];
                if comp.is_zero() {
                    continue;
                }
                let idx = multi_index(m, q, tail);
                let mut factors = vec![comp.clone()];
                let mut zero = false;
                for (slot, s) in sections.iter().enumerate() {
                    let c = &s.components[idx[slot]];
                    if c.is_zero() {
                        zero = true;
                        break;
                    }
                    factors.push(c.clone());
                }
                if !zero {
                    terms.push(Expr::product(factors));
                }
            }
            out.push(Expr::sum(terms));
        }
        let variance = Variance { contravariant: p, covariant: 0, alternating: true };
        Ok(TensorField { rank: m, variance, components: out })
    }

    /// Tensor product with indices ordered (self.contra, other.contra, self.co, other.co).
    pub fn tensor(&self, other: &TensorField) -> Result<TensorField> {
        if self.rank != other.rank {
            return Err(Error::RankMismatch { expected: self.rank, found: other.rank });
        }
        let (p1, q1) = (self.variance.contravariant, self.variance.covariant);
        let (p2, q2) = (other.variance.contravariant, other.variance.covariant);
        let variance = Variance { contravariant: p1 + p2, covariant: q1 + q2, alternating: q1 + q2 <= 1 };
        Ok(TensorField::general(self.rank, variance, |idx| {
            let mut i1 = idx[..p1].to_vec();
            i1.extend_from_slice(&idx[p1 + p2..p1 + p2 + q1]);
            let mut i2 = idx[p1..p1 + p2].to_vec();
            i2.extend_from_slice(&idx[p1 + p2 + q1..]);
            self.component(&i1) * other.component(&i2)
        }))
    }

    pub(crate) fn expect(&self, v: Variance) -> Result<()> {
        if self.variance.contravariant != v.contravariant || self.variance.covariant != v.covariant {
            return Err(Error::Variance(format!("expected {:?}, found {:?}", v, self.variance)));
        }
        Ok(())
    }

    pub(crate) fn expect_section(&self, rank: usize) -> Result<()> {
        self.expect(Variance::SECTION)?;
        if self.rank != rank {
            return Err(Error::RankMismatch { expected: rank, found: self.rank });
        }
        Ok(())
    }

    pub(crate) fn expect_form(&self, rank: usize) -> Result<()> {
        if !self.variance.is_form() {
            return Err(Error::Variance(format!("expected a form, found {:?}", self.variance)));
        }
        if self.rank != rank {
            return Err(Error::RankMismatch { expected: rank, found: self.rank });
        }
        Ok(())
    }
}

/// Wedge product in the determinant convention: `(e^1∧e^2)(e_1,e_2) = 1`.
pub fn wedge(w1: &TensorField, w2: &TensorField) -> Result<TensorField> {
    w1.expect_form(w1.rank)?;
    w2.expect_form(w1.rank)?;
    let m = w1.rank;
    let (p, q) = (w1.degree(), w2.degree());
    if p + q > m {
        return Ok(TensorField::zero(m, Variance::form(p + q)));
    }
    let splits = combinations(p + q, p);
    Ok(TensorField::form(m, p + q, |idx| {
        let mut terms = Vec::new();
        for a in &splits {
            let b: Vec<usize> = (0..p + q).filter(|k| !a.contains(k)).collect();
            let ia: Vec<usize> = a.iter().map(|k| idx[*k]).collect();
            let ib: Vec<usize> = b.iter().map(|k| idx[*k]).collect();
            let x = w1.component(&ia);
            let y = w2.component(&ib);
            if x.is_zero() || y.is_zero() {
                continue;
            }
            let mut order = a.clone();
            order.extend_from_slice(&b);
            let (sign, _) = sort_sign(&order);
            terms.push(Expr::product([Expr::constant(sign as f64), x.clone(), y.clone()]));
        }
        Expr::sum(terms)
    }))
}

/// Numerical values of a tensor field at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorValue {
    pub rank: usize,
    pub variance: Variance,
    pub data: Vec<f64>,
}

impl TensorValue {
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[flat_index(self.rank, idx)]
    }

    pub fn scalar(&self) -> f64 {
        self.data[0]
    }

    pub fn vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.data)
    }

    /// Square matrix view of a two-slot tensor (row = first slot).
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rank, self.rank, &self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| if v.abs() > m { v.abs() } else { m })
    }

    pub fn max_abs_diff(&self, other: &TensorValue) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| {
            let d = (a - b).abs();
            if d > m || d.is_nan() {
                d
            } else {
                m
            }
        })
    }
}
