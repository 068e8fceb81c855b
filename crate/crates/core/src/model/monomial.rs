use serde::{Deserialize, Serialize};

/// A monomial `∏ zᵢ^{αᵢ}` stored by its exponent vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn constant(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Degree restricted to the variable range `range`.
    pub fn degree_in(&self, range: std::ops::Range<usize>) -> u32 {
        self.0[range].iter().sum()
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(z)
            .filter(|(e, _)| **e > 0)
            .map(|(e, v)| v.powi(*e as i32))
            .product()
    }

    /// `∂/∂z_j` as `(multiplier, monomial)`; multiplier 0 when `z_j` is absent.
    pub fn partial(&self, j: usize) -> (f64, Monomial) {
        let e = self.0[j];
        if e == 0 {
            return (0.0, Monomial::constant(self.nvars()));
        }
        let mut exps = self.0.clone();
        exps[j] -= 1;
        (e as f64, Monomial(exps))
    }

    /// Value of `∂/∂z_j` at `z`, evaluated directly without allocating.
    pub fn partial_eval(&self, j: usize, z: &[f64]) -> f64 {
        let e = self.0[j];
        if e == 0 {
            return 0.0;
        }
        let mut acc = e as f64;
        for (k, (&ek, &zk)) in self.0.iter().zip(z).enumerate() {
            let p = if k == j { ek - 1 } else { ek };
            if p > 0 {
                acc *= zk.powi(p as i32);
            }
        }
        acc
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// All exponent vectors in `nvars` variables with total degree in
/// `min_deg..=max_deg`, graded then reverse-lexicographic on the exponents
/// (so `x1` precedes `x2` within a degree).
pub fn monomials_up_to(nvars: usize, min_deg: u32, max_deg: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for d in min_deg..=max_deg {
        let mut cur = vec![0u32; nvars];
        exponents_of_degree(nvars, d, 0, &mut cur, &mut out);
    }
    out
}

fn exponents_of_degree(nvars: usize, remaining: u32, pos: usize, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
    if nvars == 0 {
        if remaining == 0 {
            out.push(Monomial(Vec::new()));
        }
        return;
    }
    if pos == nvars - 1 {
        cur[pos] = remaining;
        out.push(Monomial(cur.clone()));
        cur[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        cur[pos] = e;
        exponents_of_degree(nvars, remaining - e, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Monomials `x^α u^β` in `n + m` variables with `|α| ≤ deg_x` and `|β| ≤ deg_u`.
pub fn monomials_xu(n: usize, m: usize, deg_x: u32, deg_u: u32) -> Vec<Monomial> {
    let xs = monomials_up_to(n, 0, deg_x);
    let us = monomials_up_to(m, 0, deg_u);
    let mut out = Vec::with_capacity(xs.len() * us.len());
    for ud in 0..=deg_u {
        for xd in 0..=deg_x {
            for a in xs.iter().filter(|a| a.degree() == xd) {
                for b in us.iter().filter(|b| b.degree() == ud) {
                    let mut e = a.0.clone();
                    e.extend_from_slice(&b.0);
                    out.push(Monomial(e));
                }
            }
        }
    }
    out
}
