//! Small dense linear-algebra helpers on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Dim, Matrix, RawStorage};

pub(crate) fn max_abs<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> f64 {
    m.iter().fold(0.0, |acc: f64, v| if v.is_nan() { f64::INFINITY } else { acc.max(v.abs()) })
}

pub(crate) fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| if x.is_nan() { f64::INFINITY } else { acc.max(x.abs()) })
}

pub(crate) fn min_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    if sym.nrows() == 0 {
        return f64::INFINITY;
    }
    let s = (sym + sym.transpose()) * 0.5;
    s.symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |a, b| a.min(*b))
}

/// Singular values in decreasing order.
pub(crate) fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(core::cmp::Ordering::Equal));
    s
}

/// Right singular vectors of a square matrix with singular value at most `tol`,
/// together with all singular values (decreasing).
pub(crate) fn nullspace(a: &DMatrix<f64>, tol: f64) -> (Vec<DVector<f64>>, Vec<f64>) {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut pairs: Vec<(f64, DVector<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(k, s)| (*s, v_t.row(k).transpose()))
        .collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(core::cmp::Ordering::Equal));
    let values = pairs.iter().map(|p| p.0).collect();
    let kernel = pairs.into_iter().filter(|p| p.0 <= tol).map(|p| p.1).collect();
    (kernel, values)
}

/// `M^{-1/2}` for a symmetric positive-definite matrix.
pub(crate) fn inv_sqrt_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = ((m + m.transpose()) * 0.5).symmetric_eigen();
    if eig.eigenvalues.iter().any(|l| *l <= 0.0) {
        return None;
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / libm::sqrt(l)));
    Some(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

pub(crate) fn dot_g(g: &DMatrix<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (u.transpose() * g * v)[(0, 0)]
}
