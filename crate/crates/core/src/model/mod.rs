//! The implicit polynomial model class `d/dt e(x) = f(x, u)`, `y = g(x, u)`.
//!
//! Coefficients are laid out as one flat vector: `e` rows, then `f` rows,
//! then `g` rows, each row-major over its monomial basis. That layout is the
//! decision-variable contract used by the SDP assembly.

mod affine;
mod io;
mod monomial;

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use affine::{block_matrix, AffineMatrix};
pub use io::{load_model, save_model, ModelFile};
pub use monomial::{monomials_up_to, monomials_xu, Monomial};

use crate::error::{Error, Result};
use crate::geometry::TransverseFrame;
use crate::trajectory::TrajectoryRecord;

/// Symbolic parametrization of `e`, `f`, `g` by explicit monomial bases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyModelSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub deg_e: u32,
    pub deg_f_x: u32,
    pub deg_f_u: u32,
    pub deg_g: u32,
    /// Monomials in `x` (length-`n` exponents).
    pub basis_e: Vec<Monomial>,
    /// Monomials in `(x, u)` (length-`n + m` exponents).
    pub basis_f: Vec<Monomial>,
    /// Monomials in `(x, u)`.
    pub basis_g: Vec<Monomial>,
}

impl PolyModelSpec {
    /// Default bases: `e` gets every monomial of degree `1..=deg_e` (constants
    /// in `e` never enter `d/dt e(x)`), `f` every `x^α u^β` with
    /// `|α| ≤ deg_f_x`, `|β| ≤ deg_f_u`, and `g` every monomial in `(x, u)`
    /// up to `deg_g`.
    pub fn dense(n: usize, m: usize, p: usize, deg_e: u32, deg_f_x: u32, deg_f_u: u32, deg_g: u32) -> Result<Self> {
        let basis_e = monomials_up_to(n, 1, deg_e);
        let basis_f = monomials_xu(n, m, deg_f_x, deg_f_u);
        let basis_g = monomials_up_to(n + m, 0, deg_g);
        Self::with_bases(n, m, p, deg_e, deg_f_x, deg_f_u, deg_g, basis_e, basis_f, basis_g)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_bases(
        n: usize,
        m: usize,
        p: usize,
        deg_e: u32,
        deg_f_x: u32,
        deg_f_u: u32,
        deg_g: u32,
        basis_e: Vec<Monomial>,
        basis_f: Vec<Monomial>,
        basis_g: Vec<Monomial>,
    ) -> Result<Self> {
        let spec = PolyModelSpec {
            n,
            m,
            p,
            deg_e,
            deg_f_x,
            deg_f_u,
            deg_g,
            basis_e,
            basis_f,
            basis_g,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidConfig("model needs n >= 1 and p >= 1".into()));
        }
        if self.deg_e < 1 {
            return Err(Error::InvalidConfig("deg_e must be at least 1".into()));
        }
        check_basis("e", &self.basis_e, self.n)?;
        check_basis("f", &self.basis_f, self.n + self.m)?;
        check_basis("g", &self.basis_g, self.n + self.m)?;
        if self.basis_e.iter().any(|b| b.degree() > self.deg_e) {
            return Err(Error::InvalidConfig("basis_e exceeds deg_e".into()));
        }
        let n = self.n;
        let nm = self.n + self.m;
        if self
            .basis_f
            .iter()
            .any(|b| b.degree_in(0..n) > self.deg_f_x || b.degree_in(n..nm) > self.deg_f_u)
        {
            return Err(Error::InvalidConfig("basis_f exceeds deg_f_x/deg_f_u".into()));
        }
        if self.basis_g.iter().any(|b| b.degree() > self.deg_g) {
            return Err(Error::InvalidConfig("basis_g exceeds deg_g".into()));
        }
        Ok(())
    }

    pub fn n_coef_e(&self) -> usize {
        self.n * self.basis_e.len()
    }

    pub fn n_coef_f(&self) -> usize {
        self.n * self.basis_f.len()
    }

    pub fn n_coef_g(&self) -> usize {
        self.p * self.basis_g.len()
    }

    pub fn n_coef(&self) -> usize {
        self.n_coef_e() + self.n_coef_f() + self.n_coef_g()
    }

    pub fn index_e(&self, row: usize, k: usize) -> usize {
        row * self.basis_e.len() + k
    }

    pub fn index_f(&self, row: usize, k: usize) -> usize {
        self.n_coef_e() + row * self.basis_f.len() + k
    }

    pub fn index_g(&self, row: usize, k: usize) -> usize {
        self.n_coef_e() + self.n_coef_f() + row * self.basis_g.len() + k
    }

    /// Highest degree of `E(x)` entries.
    pub fn jacobian_degree_e(&self) -> u32 {
        self.basis_e.iter().map(|b| b.degree()).max().unwrap_or(1).saturating_sub(1)
    }
}

fn check_basis(name: &str, basis: &[Monomial], nvars: usize) -> Result<()> {
    if basis.is_empty() {
        return Err(Error::InvalidConfig(format!("basis_{name} is empty")));
    }
    let mut seen = HashSet::new();
    for b in basis {
        if b.nvars() != nvars {
            return Err(Error::InvalidConfig(format!(
                "basis_{name} monomial {:?} has {} exponents, expected {nvars}",
                b.0,
                b.nvars()
            )));
        }
        if !seen.insert(b) {
            return Err(Error::InvalidConfig(format!("basis_{name} has duplicate {:?}", b.0)));
        }
    }
    Ok(())
}

/// A concrete coefficient assignment for a [`PolyModelSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCoefficients {
    pub coef_e: DMatrix<f64>,
    pub coef_f: DMatrix<f64>,
    pub coef_g: DMatrix<f64>,
}

impl ModelCoefficients {
    pub fn zeros(spec: &PolyModelSpec) -> Self {
        ModelCoefficients {
            coef_e: DMatrix::zeros(spec.n, spec.basis_e.len()),
            coef_f: DMatrix::zeros(spec.n, spec.basis_f.len()),
            coef_g: DMatrix::zeros(spec.p, spec.basis_g.len()),
        }
    }

    pub fn from_vector(spec: &PolyModelSpec, v: &[f64]) -> Result<Self> {
        if v.len() < spec.n_coef() {
            return Err(Error::shape(format!(
                "coefficient vector has {} entries, spec needs {}",
                v.len(),
                spec.n_coef()
            )));
        }
        let ne = spec.basis_e.len();
        let nf = spec.basis_f.len();
        let ng = spec.basis_g.len();
        let e = DMatrix::from_row_slice(spec.n, ne, &v[..spec.n_coef_e()]);
        let off = spec.n_coef_e();
        let f = DMatrix::from_row_slice(spec.n, nf, &v[off..off + spec.n_coef_f()]);
        let off = off + spec.n_coef_f();
        let g = DMatrix::from_row_slice(spec.p, ng, &v[off..off + spec.n_coef_g()]);
        Ok(ModelCoefficients {
            coef_e: e,
            coef_f: f,
            coef_g: g,
        })
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.coef_e.len() + self.coef_f.len() + self.coef_g.len());
        for m in [&self.coef_e, &self.coef_f, &self.coef_g] {
            for r in 0..m.nrows() {
                v.extend(m.row(r).iter());
            }
        }
        v
    }

    pub fn check(&self, spec: &PolyModelSpec) -> Result<()> {
        let want = [
            (spec.n, spec.basis_e.len()),
            (spec.n, spec.basis_f.len()),
            (spec.p, spec.basis_g.len()),
        ];
        let have = [self.coef_e.shape(), self.coef_f.shape(), self.coef_g.shape()];
        if want != have {
            return Err(Error::shape(format!("coefficient shapes {have:?}, spec expects {want:?}")));
        }
        if self.to_vector().iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidData("non-finite model coefficient".into()));
        }
        Ok(())
    }
}

fn xu(x: &[f64], u: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(x.len() + u.len());
    z.extend_from_slice(x);
    z.extend_from_slice(u);
    z
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::shape(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

fn poly_eval(coef: &DMatrix<f64>, basis: &[Monomial], z: &[f64]) -> DVector<f64> {
    let vals: Vec<f64> = basis.iter().map(|b| b.eval(z)).collect();
    coef * DVector::from_vec(vals)
}

/// Jacobian w.r.t. the first `ncols` variables of `z`.
fn poly_jacobian(coef: &DMatrix<f64>, basis: &[Monomial], z: &[f64], ncols: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(basis.len(), ncols);
    for (k, b) in basis.iter().enumerate() {
        for j in 0..ncols {
            d[(k, j)] = b.partial_eval(j, z);
        }
    }
    coef * d
}

pub fn eval_e(spec: &PolyModelSpec, coefs: &ModelCoefficients, x: &[f64]) -> Result<DVector<f64>> {
    check_len("x", x.len(), spec.n)?;
    Ok(poly_eval(&coefs.coef_e, &spec.basis_e, x))
}

pub fn eval_f(spec: &PolyModelSpec, coefs: &ModelCoefficients, x: &[f64], u: &[f64]) -> Result<DVector<f64>> {
    check_len("x", x.len(), spec.n)?;
    check_len("u", u.len(), spec.m)?;
    Ok(poly_eval(&coefs.coef_f, &spec.basis_f, &xu(x, u)))
}

pub fn eval_g(spec: &PolyModelSpec, coefs: &ModelCoefficients, x: &[f64], u: &[f64]) -> Result<DVector<f64>> {
    check_len("x", x.len(), spec.n)?;
    check_len("u", u.len(), spec.m)?;
    Ok(poly_eval(&coefs.coef_g, &spec.basis_g, &xu(x, u)))
}

/// `E(x) = ∂e/∂x`.
pub fn jacobian_e(spec: &PolyModelSpec, coefs: &ModelCoefficients, x: &[f64]) -> Result<DMatrix<f64>> {
    check_len("x", x.len(), spec.n)?;
    Ok(poly_jacobian(&coefs.coef_e, &spec.basis_e, x, spec.n))
}

/// `F(x, u) = ∂f/∂x`.
pub fn jacobian_f_x(spec: &PolyModelSpec, coefs: &ModelCoefficients, x: &[f64], u: &[f64]) -> Result<DMatrix<f64>> {
    check_len("x", x.len(), spec.n)?;
    check_len("u", u.len(), spec.m)?;
    Ok(poly_jacobian(&coefs.coef_f, &spec.basis_f, &xu(x, u), spec.n))
}

/// `G(x, u) = ∂g/∂x`.
pub fn jacobian_g_x(spec: &PolyModelSpec, coefs: &ModelCoefficients, x: &[f64], u: &[f64]) -> Result<DMatrix<f64>> {
    check_len("x", x.len(), spec.n)?;
    check_len("u", u.len(), spec.m)?;
    Ok(poly_jacobian(&coefs.coef_g, &spec.basis_g, &xu(x, u), spec.n))
}

fn check_record(spec: &PolyModelSpec, record: &TrajectoryRecord) -> Result<()> {
    if record.n() != spec.n || record.m() != spec.m || record.p() != spec.p {
        return Err(Error::shape(format!(
            "record (n, m, p) = ({}, {}, {}), spec expects ({}, {}, {})",
            record.n(),
            record.m(),
            record.p(),
            spec.n,
            spec.m,
            spec.p
        )));
    }
    Ok(())
}

/// Per-sample equation errors `ε_x = E(x̃)ẋ̃ − f(x̃, ũ)`, `ε_y = ỹ − g(x̃, ũ)`.
pub fn equation_errors(
    spec: &PolyModelSpec,
    coefs: &ModelCoefficients,
    record: &TrajectoryRecord,
) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    check_record(spec, record)?;
    coefs.check(spec)?;
    (0..record.len())
        .map(|i| {
            let (x, xd, u, y) = (&record.x[i], &record.xdot[i], &record.u[i], &record.y[i]);
            let e = jacobian_e(spec, coefs, x)?;
            let ex = e * DVector::from_column_slice(xd) - eval_f(spec, coefs, x, u)?;
            let ey = DVector::from_column_slice(y) - eval_g(spec, coefs, x, u)?;
            Ok((ex, ey))
        })
        .collect()
}

/// Numeric per-sample quantities feeding the local costs.
#[derive(Clone, Debug)]
pub struct SamplePointData {
    pub e: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub eps_x: DVector<f64>,
    pub eps_y: DVector<f64>,
    pub frame: Option<TransverseFrame>,
}

/// Evaluate [`SamplePointData`] at every sample, attaching `frames` when given.
pub fn sample_data(
    spec: &PolyModelSpec,
    coefs: &ModelCoefficients,
    record: &TrajectoryRecord,
    frames: Option<&[TransverseFrame]>,
) -> Result<Vec<SamplePointData>> {
    let errs = equation_errors(spec, coefs, record)?;
    if let Some(fr) = frames {
        check_len("frames", fr.len(), record.len())?;
    }
    errs.into_iter()
        .enumerate()
        .map(|(i, (eps_x, eps_y))| {
            let (x, u) = (&record.x[i], &record.u[i]);
            Ok(SamplePointData {
                e: jacobian_e(spec, coefs, x)?,
                f: jacobian_f_x(spec, coefs, x, u)?,
                g: jacobian_g_x(spec, coefs, x, u)?,
                eps_x,
                eps_y,
                frame: frames.map(|f| f[i].clone()),
            })
        })
        .collect()
}

/// `E, F, G, ε_x, ε_y` at one sample as affine functions of the flat
/// coefficient vector.
#[derive(Clone, Debug)]
pub struct SampleAffine {
    pub e: AffineMatrix,
    pub f: AffineMatrix,
    pub g: AffineMatrix,
    pub eps_x: AffineMatrix,
    pub eps_y: AffineMatrix,
}

impl SampleAffine {
    /// Numeric evaluation at a flat coefficient vector.
    pub fn eval(&self, coefs: &[f64], frame: Option<TransverseFrame>) -> SamplePointData {
        SamplePointData {
            e: self.e.eval(coefs),
            f: self.f.eval(coefs),
            g: self.g.eval(coefs),
            eps_x: self.eps_x.eval(coefs).column(0).into_owned(),
            eps_y: self.eps_y.eval(coefs).column(0).into_owned(),
            frame,
        }
    }
}

/// Build the per-sample affine maps of `(E, F, G, ε_x, ε_y)`.
pub fn affine_maps(spec: &PolyModelSpec, record: &TrajectoryRecord) -> Result<Vec<SampleAffine>> {
    check_record(spec, record)?;
    Ok((0..record.len()).map(|i| sample_affine(spec, record, i)).collect())
}

fn sample_affine(spec: &PolyModelSpec, record: &TrajectoryRecord, i: usize) -> SampleAffine {
    let (n, p) = (spec.n, spec.p);
    let x = &record.x[i];
    let xd = &record.xdot[i];
    let z = xu(x, &record.u[i]);

    let mut e = AffineMatrix::zeros(n, n);
    let mut eps_x = AffineMatrix::zeros(n, 1);
    for (k, b) in spec.basis_e.iter().enumerate() {
        let grad: Vec<f64> = (0..n).map(|j| b.partial_eval(j, x)).collect();
        let along: f64 = grad.iter().zip(xd).map(|(g, v)| g * v).sum();
        for row in 0..n {
            let var = spec.index_e(row, k);
            let mut unit = DMatrix::zeros(n, n);
            unit.row_mut(row).copy_from_slice(&grad);
            e.terms.push((var, unit));
            let mut ue = DMatrix::zeros(n, 1);
            ue[(row, 0)] = along;
            eps_x.terms.push((var, ue));
        }
    }
    let mut f = AffineMatrix::zeros(n, n);
    for (k, b) in spec.basis_f.iter().enumerate() {
        let grad: Vec<f64> = (0..n).map(|j| b.partial_eval(j, &z)).collect();
        let val = b.eval(&z);
        for row in 0..n {
            let var = spec.index_f(row, k);
            let mut unit = DMatrix::zeros(n, n);
            unit.row_mut(row).copy_from_slice(&grad);
            f.terms.push((var, unit));
            let mut ue = DMatrix::zeros(n, 1);
            ue[(row, 0)] = -val;
            eps_x.terms.push((var, ue));
        }
    }
    let mut g = AffineMatrix::zeros(p, n);
    let mut eps_y = AffineMatrix::constant(DMatrix::from_column_slice(p, 1, &record.y[i]));
    for (k, b) in spec.basis_g.iter().enumerate() {
        let grad: Vec<f64> = (0..n).map(|j| b.partial_eval(j, &z)).collect();
        let val = b.eval(&z);
        for row in 0..p {
            let var = spec.index_g(row, k);
            let mut unit = DMatrix::zeros(p, n);
            unit.row_mut(row).copy_from_slice(&grad);
            g.terms.push((var, unit));
            let mut ue = DMatrix::zeros(p, 1);
            ue[(row, 0)] = -val;
            eps_y.terms.push((var, ue));
        }
    }
    for a in [&mut e, &mut f, &mut g, &mut eps_x, &mut eps_y] {
        a.terms.sort_by_key(|t| t.0);
    }
    SampleAffine { e, f, g, eps_x, eps_y }
}

#[cfg(test)]
mod tests;
