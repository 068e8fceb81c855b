use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::program::LinearEquality;
use crate::linalg::{vech_index, vech_len};
use crate::model::{monomials_up_to, AffineMatrix, Monomial, PolyModelSpec};

/// Matrix sum-of-squares certificate for `E(x) + E(x)ᵀ − (1 + margin)·I ⪰ 0`.
///
/// Writes `yᵀ(E + Eᵀ − (1 + margin)I)y = zᵀWz` with `z = m(x) ⊗ y`
/// (`z` indexed `k·n + i` for monomial `m_k` and component `y_i`) and
/// `W ⪰ 0`, matching the coefficient of every `x^α y_i y_j`. When `E` is
/// constant the certificate is the direct LMI on the coefficients and has no
/// Gram variables.
#[derive(Clone, Debug, PartialEq)]
pub struct SosCertificate {
    pub n: usize,
    /// `m(x)`; empty for the direct constant-`E` form.
    pub basis: Vec<Monomial>,
    pub gram_offset: usize,
    pub block: AffineMatrix,
    pub equalities: Vec<LinearEquality>,
}

impl SosCertificate {
    pub fn gram_dim(&self) -> usize {
        self.basis.len() * self.n
    }

    pub fn n_gram_vars(&self) -> usize {
        if self.basis.is_empty() {
            0
        } else {
            vech_len(self.gram_dim())
        }
    }

    pub fn is_direct(&self) -> bool {
        self.basis.is_empty()
    }
}

/// `(α, i, j)` with `i ≤ j`.
type Key = (Monomial, usize, usize);

#[derive(Default)]
struct Linear {
    terms: BTreeMap<usize, f64>,
    constant: f64,
}

/// Coefficients of `yᵀHy`, `H = E + Eᵀ − (1 + margin)I`, as affine functions
/// of the `e` coefficients.
fn target_polynomial(spec: &PolyModelSpec, margin: f64) -> BTreeMap<Key, Linear> {
    let n = spec.n;
    let mut out: BTreeMap<Key, Linear> = BTreeMap::new();
    for (k, b) in spec.basis_e.iter().enumerate() {
        for row in 0..n {
            let var = spec.index_e(row, k);
            for col in 0..n {
                let (c, mono) = b.partial(col);
                if c == 0.0 {
                    continue;
                }
                // E[row][col] contributes to y_row y_col: weight 2 on the
                // diagonal (E + Eᵀ) and 2 off it (y_i y_j and y_j y_i).
                let (i, j) = if row <= col { (row, col) } else { (col, row) };
                *out.entry((mono, i, j)).or_default().terms.entry(var).or_insert(0.0) += 2.0 * c;
            }
        }
    }
    for i in 0..n {
        out.entry((Monomial::constant(n), i, i)).or_default().constant -= 1.0 + margin;
    }
    out
}

/// Build the certificate with Gram variables starting at `gram_offset`.
pub fn build_sos_block(spec: &PolyModelSpec, gram_offset: usize, margin: f64) -> SosCertificate {
    let n = spec.n;
    let target = target_polynomial(spec, margin);
    let d = spec.jacobian_degree_e();
    if d == 0 {
        let mut block = AffineMatrix::zeros(n, n);
        for ((_, i, j), lin) in &target {
            let mut unit = DMatrix::zeros(n, n);
            if i == j {
                unit[(*i, *i)] = 1.0;
            } else {
                unit[(*i, *j)] = 0.5;
                unit[(*j, *i)] = 0.5;
            }
            block.constant += &unit * lin.constant;
            for (v, c) in &lin.terms {
                block.add_term(*v, &unit, *c);
            }
        }
        return SosCertificate {
            n,
            basis: Vec::new(),
            gram_offset,
            block,
            equalities: Vec::new(),
        };
    }

    let basis = monomials_up_to(n, 0, d.div_ceil(2));
    let dim = basis.len() * n;
    let mut block = AffineMatrix::zeros(dim, dim);
    let mut gram: BTreeMap<Key, Vec<(usize, f64)>> = BTreeMap::new();
    for b_idx in 0..dim {
        for a_idx in b_idx..dim {
            let var = gram_offset + vech_index(dim, a_idx, b_idx);
            let mut unit = DMatrix::zeros(dim, dim);
            unit[(a_idx, b_idx)] = 1.0;
            unit[(b_idx, a_idx)] = 1.0;
            block.add_term(var, &unit, 1.0);
            let (ka, ia) = (a_idx / n, a_idx % n);
            let (kb, ib) = (b_idx / n, b_idx % n);
            let mono = basis[ka].mul(&basis[kb]);
            let (i, j) = if ia <= ib { (ia, ib) } else { (ib, ia) };
            let weight = if a_idx == b_idx { 1.0 } else { 2.0 };
            gram.entry((mono, i, j)).or_default().push((var, weight));
        }
    }
    let mut keys: Vec<&Key> = gram.keys().chain(target.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut equalities = Vec::with_capacity(keys.len());
    for key in keys {
        // gram side − target linear part = target constant
        let mut coefs: Vec<(usize, f64)> = gram.get(key).cloned().unwrap_or_default();
        let mut rhs = 0.0;
        if let Some(lin) = target.get(key) {
            coefs.extend(lin.terms.iter().map(|(v, c)| (*v, -c)));
            rhs = lin.constant;
        }
        if coefs.iter().all(|(_, c)| *c == 0.0) && rhs == 0.0 {
            continue;
        }
        equalities.push(LinearEquality { coefs, rhs });
    }
    SosCertificate {
        n,
        basis,
        gram_offset,
        block,
        equalities,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelCoefficients;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(n: usize, deg_e: u32) -> PolyModelSpec {
        PolyModelSpec::dense(n, 0, 1, deg_e, 1, 0, 1).unwrap()
    }

    #[test]
    fn constant_jacobian_is_direct_lmi() {
        let s = spec(2, 1);
        let cert = build_sos_block(&s, 100, 0.0);
        assert!(cert.is_direct());
        assert_eq!(cert.n_gram_vars(), 0);
        // e(x) = x: E + Eᵀ − I = I
        let mut c = ModelCoefficients::zeros(&s);
        c.coef_e[(0, 0)] = 1.0;
        c.coef_e[(1, 1)] = 1.0;
        let m = cert.block.eval(&c.to_vector());
        assert!((m - DMatrix::identity(2, 2)).abs().max() < 1e-15);
    }

    /// Pick a random PSD Gram matrix, read off the polynomial it certifies,
    /// and check that the equalities hold for matching `e` coefficients.
    #[test]
    fn equalities_match_gram_expansion() {
        let s = spec(2, 3);
        let nc = s.n_coef();
        let cert = build_sos_block(&s, nc, 0.0);
        assert_eq!(cert.basis.len(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coefs: Vec<f64> = (0..s.n_coef_e()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut c = ModelCoefficients::zeros(&s);
        for (k, v) in coefs.iter().enumerate() {
            c.coef_e[(k / s.basis_e.len(), k % s.basis_e.len())] = *v;
        }
        // evaluate the residual polynomial at random (x, y) and compare with
        // zᵀWz for a W solving the equalities: use least squares on the
        // equality system restricted to Gram variables.
        let ng = cert.n_gram_vars();
        let mut a = DMatrix::zeros(cert.equalities.len(), ng);
        let mut b = nalgebra::DVector::zeros(cert.equalities.len());
        let mut x = c.to_vector();
        x.resize(nc + ng, 0.0);
        for (r, eq) in cert.equalities.iter().enumerate() {
            let mut rhs = eq.rhs;
            for (v, w) in &eq.coefs {
                if *v >= nc {
                    a[(r, v - nc)] += w;
                } else {
                    rhs -= w * x[*v];
                }
            }
            b[r] = rhs;
        }
        let sol = a.clone().svd(true, true).solve(&b, 1e-12).unwrap();
        assert!((&a * &sol - &b).abs().max() < 1e-10);
        for (k, v) in sol.iter().enumerate() {
            x[nc + k] = *v;
        }
        let w = cert.block.eval(&x);
        for _ in 0..20 {
            let pt = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let y = nalgebra::DVector::from_column_slice(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            let e = crate::model::jacobian_e(&s, &c, &pt).unwrap();
            let lhs = (y.transpose() * (&e + e.transpose() - DMatrix::identity(2, 2)) * &y)[(0, 0)];
            let mut z = nalgebra::DVector::zeros(cert.gram_dim());
            for (k, m) in cert.basis.iter().enumerate() {
                for i in 0..2 {
                    z[k * 2 + i] = m.eval(&pt) * y[i];
                }
            }
            let rhs = (z.transpose() * &w * &z)[(0, 0)];
            assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }
}
