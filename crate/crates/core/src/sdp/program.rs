use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::AffineMatrix;

/// A linear equality `Σ coefs[k].1 · x[coefs[k].0] = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearEquality {
    pub coefs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearEquality {
    pub fn pin(var: usize, value: f64) -> Self {
        LinearEquality {
            coefs: vec![(var, 1.0)],
            rhs: value,
        }
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|(v, c)| c * x[*v]).sum::<f64>() - self.rhs
    }
}

/// `M(x) = C + Σ x_v A_v ⪰ 0` with every matrix symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdBlock {
    pub label: String,
    pub map: AffineMatrix,
}

impl PsdBlock {
    pub fn new(label: impl Into<String>, map: AffineMatrix) -> Self {
        PsdBlock {
            label: label.into(),
            map,
        }
    }

    pub fn dim(&self) -> usize {
        self.map.nrows()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let sym = |m: &DMatrix<f64>| m.is_square() && (m - m.transpose()).abs().max() <= tol;
        sym(&self.map.constant) && self.map.terms.iter().all(|(_, a)| sym(a))
    }
}

/// Named contiguous ranges of the decision vector.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VariableLayout {
    pub coefficients: std::ops::Range<usize>,
    pub metric: std::ops::Range<usize>,
    pub slacks: std::ops::Range<usize>,
    pub l1: std::ops::Range<usize>,
    pub gram: std::ops::Range<usize>,
}

/// `min cᵀx` subject to PSD blocks and linear equalities.
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<PsdBlock>,
    pub equalities: Vec<LinearEquality>,
    pub layout: VariableLayout,
}

/// Order in which the triangle of a symmetric block is vectorized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SvecOrder {
    /// `(0,0), (1,0), …, (d−1,0), (1,1), …`
    LowerColumns,
    /// `(0,0), (0,1), (1,1), (0,2), …`
    UpperColumns,
}

/// Scaled half-vectorization: off-diagonal entries are multiplied by `√2`
/// so that `⟨svec A, svec B⟩ = tr(AB)`.
pub fn svec(m: &DMatrix<f64>, order: SvecOrder) -> Vec<f64> {
    svec_positions(m.nrows(), order)
        .into_iter()
        .map(|(i, j)| if i == j { m[(i, j)] } else { m[(i, j)] * std::f64::consts::SQRT_2 })
        .collect()
}

/// `(row, col)` of each svec position.
pub fn svec_positions(d: usize, order: SvecOrder) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    match order {
        SvecOrder::LowerColumns => {
            for j in 0..d {
                for i in j..d {
                    out.push((i, j));
                }
            }
        }
        SvecOrder::UpperColumns => {
            for j in 0..d {
                for i in 0..=j {
                    out.push((i, j));
                }
            }
        }
    }
    out
}

/// Vectorized form `min cᵀx  s.t.  b − A x ∈ {0}^{n_eq} × S₁ × … × S_k`,
/// where each `S_i` is the PSD cone of a block in svec coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardForm {
    pub n_vars: usize,
    pub c: Vec<f64>,
    /// Triplets `(row, col, value)` of `A`.
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub n_eq: usize,
    pub block_dims: Vec<usize>,
}

impl ConicProgram {
    pub fn new(n_vars: usize) -> Self {
        ConicProgram {
            n_vars,
            objective: vec![0.0; n_vars],
            blocks: Vec::new(),
            equalities: Vec::new(),
            layout: VariableLayout::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.n_vars {
            return Err(Error::shape("objective length differs from variable count"));
        }
        for b in &self.blocks {
            if b.map.terms.iter().any(|(v, _)| *v >= self.n_vars) {
                return Err(Error::shape(format!("block {} references an unknown variable", b.label)));
            }
            let scale = b.map.terms.iter().fold(b.map.constant.abs().max(), |s, (_, a)| s.max(a.abs().max()));
            if !b.is_symmetric(1e-12 * scale.max(1.0)) {
                return Err(Error::shape(format!("block {} is not symmetric", b.label)));
            }
        }
        if self.equalities.iter().any(|e| e.coefs.iter().any(|(v, _)| *v >= self.n_vars)) {
            return Err(Error::shape("equality references an unknown variable"));
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Variables that occur in some block or equality.
    pub fn used_variables(&self) -> Vec<bool> {
        let mut used = vec![false; self.n_vars];
        for b in &self.blocks {
            for (v, a) in &b.map.terms {
                if a.iter().any(|x| *x != 0.0) {
                    used[*v] = true;
                }
            }
        }
        for e in &self.equalities {
            for (v, c) in &e.coefs {
                if *c != 0.0 {
                    used[*v] = true;
                }
            }
        }
        used
    }

    pub fn to_standard_form(&self, order: SvecOrder) -> StandardForm {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (r, eq) in self.equalities.iter().enumerate() {
            for (v, c) in &eq.coefs {
                a.push((r, *v, *c));
            }
            b.push(eq.rhs);
        }
        let mut row0 = self.equalities.len();
        for blk in &self.blocks {
            let pos = svec_positions(blk.dim(), order);
            b.extend(svec(&blk.map.constant, order));
            for (v, m) in &blk.map.terms {
                for (k, &(i, j)) in pos.iter().enumerate() {
                    let val = m[(i, j)];
                    if val != 0.0 {
                        let s = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
                        a.push((row0 + k, *v, -val * s));
                    }
                }
            }
            row0 += pos.len();
        }
        StandardForm {
            n_vars: self.n_vars,
            c: self.objective.clone(),
            a,
            b,
            n_eq: self.equalities.len(),
            block_dims: self.blocks.iter().map(|b| b.dim()).collect(),
        }
    }

    /// Sparse SDPA text (`min cᵀx  s.t.  Σ F_v x_v − F₀ ⪰ 0`). Equalities go
    /// into a trailing diagonal (LP) block as pairs of opposite inequalities.
    pub fn to_sdpa(&self) -> String {
        let mut out = String::new();
        let n_lp = 2 * self.equalities.len();
        let n_blocks = self.blocks.len() + usize::from(n_lp > 0);
        writeln!(out, "{}", self.n_vars).unwrap();
        writeln!(out, "{n_blocks}").unwrap();
        let mut sizes: Vec<String> = self.blocks.iter().map(|b| b.dim().to_string()).collect();
        if n_lp > 0 {
            sizes.push(format!("-{n_lp}"));
        }
        writeln!(out, "{}", sizes.join(" ")).unwrap();
        let c: Vec<String> = self.objective.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", c.join(" ")).unwrap();
        for (bi, blk) in self.blocks.iter().enumerate() {
            let mut entry = |mat: usize, m: &DMatrix<f64>, sign: f64| {
                for j in 0..m.ncols() {
                    for i in 0..=j {
                        if m[(i, j)] != 0.0 {
                            writeln!(out, "{mat} {} {} {} {:?}", bi + 1, i + 1, j + 1, sign * m[(i, j)]).unwrap();
                        }
                    }
                }
            };
            entry(0, &blk.map.constant, -1.0);
            for (v, m) in &blk.map.terms {
                entry(v + 1, m, 1.0);
            }
        }
        if n_lp > 0 {
            let lp = self.blocks.len() + 1;
            for (k, eq) in self.equalities.iter().enumerate() {
                let (r1, r2) = (2 * k + 1, 2 * k + 2);
                if eq.rhs != 0.0 {
                    writeln!(out, "0 {lp} {r1} {r1} {:?}", eq.rhs).unwrap();
                    writeln!(out, "0 {lp} {r2} {r2} {:?}", -eq.rhs).unwrap();
                }
                for (v, c) in &eq.coefs {
                    writeln!(out, "{} {lp} {r1} {r1} {c:?}", v + 1).unwrap();
                    writeln!(out, "{} {lp} {r2} {r2} {:?}", v + 1, -c).unwrap();
                }
            }
        }
        out
    }

    pub fn write_sdpa(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_sdpa()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_inner_product_is_trace() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, -1.0, 1.0, 3.0, 0.5, -1.0, 0.5, 1.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.0, -2.0, 1.0, 4.0, 0.0, 4.0, 2.0]);
        for order in [SvecOrder::LowerColumns, SvecOrder::UpperColumns] {
            let ip: f64 = svec(&a, order).iter().zip(svec(&b, order)).map(|(x, y)| x * y).sum();
            assert!((ip - (&a * &b).trace()).abs() < 1e-12);
        }
        assert_eq!(svec_positions(3, SvecOrder::LowerColumns)[..3], [(0, 0), (1, 0), (2, 0)]);
        assert_eq!(svec_positions(3, SvecOrder::UpperColumns)[..3], [(0, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn sdpa_export_layout() {
        let mut p = ConicProgram::new(2);
        p.objective = vec![1.0, 0.0];
        let mut m = AffineMatrix::constant(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        m.add_term(0, &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), 1.0);
        m.add_term(1, &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]), 1.0);
        p.blocks.push(PsdBlock::new("b", m));
        p.equalities.push(LinearEquality::pin(1, 2.0));
        let text = p.to_sdpa();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[..4], ["2", "2", "2 -2", "1.0 0.0"]);
        assert!(lines.contains(&"0 1 1 2 -1.0"));
        assert!(lines.contains(&"2 2 2 2 -1.0"));
        assert!(p.validate().is_ok());
    }

    #[test]
    fn standard_form_reconstructs_blocks() {
        let mut m = AffineMatrix::constant(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]));
        m.add_term(0, &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), 1.0);
        let mut p = ConicProgram::new(1);
        p.blocks.push(PsdBlock::new("b", m.clone()));
        let sf = p.to_standard_form(SvecOrder::LowerColumns);
        let x = [0.7];
        let mut s = sf.b.clone();
        for &(r, c, v) in &sf.a {
            s[r] -= v * x[c];
        }
        assert_eq!(s.len(), 3);
        let want = svec(&m.eval(&x), SvecOrder::LowerColumns);
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
