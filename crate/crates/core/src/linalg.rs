//! Thin wrappers over the nalgebra eigensolvers plus spectrum utilities.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tensor::C64;

const SCHUR_MAX_ITER: usize = 100_000;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a general real square matrix through a real Schur form.
///
/// The unshifted-restart QR iteration can stall on highly structured
/// matrices, so a failed attempt is retried with a looser deflation
/// threshold and then on an orthogonally similar matrix.
pub fn real_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    let n = m.nrows();
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![C64::new(m[(0, 0)], 0.0)]),
        _ => {}
    }
    let schur = |a: &DMatrix<f64>, eps: f64| {
        Schur::try_new(a.clone(), eps, SCHUR_MAX_ITER).map(|s| s.complex_eigenvalues().iter().copied().collect())
    };
    for eps in [f64::EPSILON, 8.0 * f64::EPSILON] {
        if let Some(ev) = schur(m, eps) {
            return Ok(ev);
        }
    }
    let q = householder(n);
    schur(&(&q * m * &q), f64::EPSILON).ok_or(Error::NoConvergence(n))
}

/// A fixed reflection `1 − 2vvᵀ/|v|²` with irregular entries.
fn householder(n: usize) -> DMatrix<f64> {
    let v = DVector::from_fn(n, |k, _| 1.0 + ((k as f64 + 1.0) * 0.618_033_988_749_894_9).fract());
    DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / v.norm_squared())
}

/// Eigenvalues of a symmetric real matrix, returned as complex numbers with
/// zero imaginary part.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<C64> {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().map(|&x| C64::new(x, 0.0)).collect()
}

pub fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|r| (r + 1..n).all(|c| m[(r, c)] == m[(c, r)]))
}

/// Orthonormal basis of `{v : m v = v}` from the singular vectors of `m - 1`.
pub fn unit_eigenvectors(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let n = m.nrows();
    let shifted = m - DMatrix::<f64>::identity(n, n);
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < tol)
        .map(|(k, _)| v_t.row(k).transpose())
        .collect()
}

/// Order by decreasing modulus, then increasing phase.
pub fn spectral_order(a: &C64, b: &C64) -> Ordering {
    b.norm().total_cmp(&a.norm()).then_with(|| a.arg().total_cmp(&b.arg()))
}

/// Multiset equality up to `tol`, matching each element of `a` to its
/// nearest unused element of `b`.
pub fn multiset_close(a: &[C64], b: &[C64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for x in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .min_by(|(_, u), (_, v)| (*u - x).norm().total_cmp(&(*v - x).norm()));
        match best {
            Some((k, y)) if (y - x).norm() <= tol => used[k] = true,
            _ => return false,
        }
    }
    true
}
