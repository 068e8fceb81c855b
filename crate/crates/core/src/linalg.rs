//! Small dense linear-algebra helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector};

/// Symmetric part `(A + Aᵀ) / 2`.
pub fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `a`, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = sym(a).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a).first().copied().unwrap_or(f64::INFINITY)
}

pub fn max_eigenvalue(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a).last().copied().unwrap_or(f64::NEG_INFINITY)
}

/// Spectral norm.
pub fn norm2(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

/// 2-norm condition number, `inf` for exactly singular matrices.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let hi = sv.max();
    let lo = sv.min();
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Orthonormal basis (as columns) of the orthogonal complement of `v`.
///
/// Uses the Householder reflector `H = I − 2wwᵀ/|w|²` that maps `v/|v|` to
/// `±e₁`; columns `2..n` of `H` span `v⊥`. The sign choice keeps `w` away
/// from cancellation.
pub fn householder_complement(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    let norm = v.norm();
    let u = v / norm;
    let mut w = u.clone();
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    w[0] += sign;
    let ww = w.norm_squared();
    let mut h = DMatrix::<f64>::identity(n, n);
    if ww > 0.0 {
        h -= (&w * w.transpose()) * (2.0 / ww);
    }
    h.columns(1, n - 1).into_owned()
}

/// Rotate the columns of `basis` by the orthogonal matrix that best maps it
/// onto `reference` (orthogonal Procrustes). The column span is unchanged.
pub fn procrustes_align(basis: &DMatrix<f64>, reference: &DMatrix<f64>) -> DMatrix<f64> {
    let m = basis.transpose() * reference;
    let svd = m.svd(true, true);
    let (Some(u), Some(vt)) = (svd.u, svd.v_t) else {
        return basis.clone();
    };
    basis * (u * vt)
}

/// Length of the half-vectorization of an `n × n` symmetric matrix.
pub fn vech_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of entry `(i, j)` in the lower-triangular column-stacked
/// half-vectorization (`(0,0), (1,0), …, (n−1,0), (1,1), …`).
pub fn vech_index(n: usize, i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    // columns before c hold n + (n-1) + ... + (n-c+1) entries
    c * n - c * c.saturating_sub(1) / 2 + (r - c)
}

/// Rebuild a symmetric matrix from its lower-triangular column-stacked
/// half-vectorization.
pub fn unvech(n: usize, v: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let x = v[vech_index(n, i, j)];
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}
