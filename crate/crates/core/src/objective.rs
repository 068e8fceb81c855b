//! Pointwise identification costs for fixed model coefficients.
//!
//! Every cost is the supremum over a perturbation `Δ` of a quadratic form
//! `ΔᵀHΔ + 2hᵀΔ + c`, evaluated in closed form by [`sup_quadratic`]:
//!
//! | cost        | `Δ` lives in | form                                                    |
//! |-------------|--------------|---------------------------------------------------------|
//! | `rie`       | `ℝⁿ`         | `2ΔᵀEᵀQ(FΔ + ε_x) + |GΔ + ε_y|²`                        |
//! | `trie`      | `ℝⁿ⁻¹`       | the same with `Δ ← Π^rΔ` and `F ← F + EΠ̇`             |
//! | `trie_hat`  | `ℝⁿ⁻¹`       | `½|Δ_e⁺|²_Q + ½|Π^rΔ|²_P − (Π^rΔ)ᵀΔ_e⁻ + |Δ_y|²`         |
//!
//! with `Δ_e^± = (E(I ± Π̇) ± F)Π^rΔ ± ε_x`, `Δ_y = GΠ^rΔ + ε_y` and
//! `P = Q⁻¹`. The last form is jointly convex in the model and `P`, and
//! bounds the second from above.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TransverseFrame;
use crate::linalg::{min_eigenvalue, norm2, sym};
use crate::model::{sample_data, ModelCoefficients, PolyModelSpec, SamplePointData};
use crate::trajectory::TrajectoryRecord;

/// Relative eigenvalue tolerance for the semidefinite boundary.
pub const SEMIDEFINITE_TOL: f64 = 1e-9;
/// Relative tolerance on the part of `h` outside `range(H)`.
pub const RANGE_TOL: f64 = 1e-8;

/// The storage metric `Q ≻ 0` together with `P = Q⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    pub q: DMatrix<f64>,
    pub p: DMatrix<f64>,
}

impl Metric {
    pub fn from_q(q: DMatrix<f64>) -> Result<Self> {
        let p = Self::checked_inverse(&q)?;
        Ok(Metric { q, p })
    }

    pub fn from_p(p: DMatrix<f64>) -> Result<Self> {
        let q = Self::checked_inverse(&p)?;
        Ok(Metric { q, p })
    }

    pub fn identity(n: usize) -> Self {
        Metric {
            q: DMatrix::identity(n, n),
            p: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    fn checked_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if !a.is_square() || a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("metric must be a finite square matrix".into()));
        }
        let scale = a.abs().max().max(1.0);
        if (a - a.transpose()).abs().max() > 1e-12 * scale {
            return Err(Error::InvalidData("metric is not symmetric".into()));
        }
        let a = sym(a);
        if min_eigenvalue(&a) <= 0.0 {
            return Err(Error::InvalidData("metric is not positive definite".into()));
        }
        let inv = a.clone().cholesky().map(|c| c.inverse()).ok_or_else(|| {
            Error::InvalidData("metric is not positive definite".into())
        })?;
        let inv = sym(&inv);
        let resid = (&a * &inv - DMatrix::identity(a.nrows(), a.nrows())).abs().max();
        if resid > 1e-8 {
            return Err(Error::InvalidData(format!("metric is too ill-conditioned (|QP - I| = {resid:e})")));
        }
        Ok(inv)
    }
}

/// `sup_Δ ΔᵀHΔ + 2hᵀΔ + c` for symmetric `H`.
///
/// Finite iff `H ⪯ 0` (largest eigenvalue at most `1e-9·‖H‖`) and `h` lies
/// in `range(H)` up to `1e-8·max(1, |h|)`; the value is then
/// `c − hᵀH⁺h`. Returns `+∞` otherwise.
pub fn sup_quadratic(h_mat: &DMatrix<f64>, h: &DVector<f64>, c: f64) -> f64 {
    if h_mat.nrows() == 0 {
        return c;
    }
    if h_mat.iter().chain(h.iter()).any(|v| !v.is_finite()) || !c.is_finite() {
        return f64::INFINITY;
    }
    let hs = sym(h_mat);
    let tol = SEMIDEFINITE_TOL * norm2(&hs);
    let eig = hs.symmetric_eigen();
    let mut value = c;
    let hnorm = h.norm();
    let mut null_part = 0.0;
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        let proj = eig.eigenvectors.column(k).dot(h);
        if lam > tol {
            return f64::INFINITY;
        }
        if lam < -tol {
            value -= proj * proj / lam;
        } else {
            null_part += proj * proj;
        }
    }
    if null_part.sqrt() > RANGE_TOL * hnorm.max(1.0) {
        return f64::INFINITY;
    }
    value
}

/// Data `(H, h, c)` of a quadratic form `ΔᵀHΔ + 2hᵀΔ + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub hess: DMatrix<f64>,
    pub lin: DVector<f64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn eval(&self, delta: &DVector<f64>) -> f64 {
        (delta.transpose() * &self.hess * delta)[(0, 0)] + 2.0 * self.lin.dot(delta) + self.c
    }

    pub fn sup(&self) -> f64 {
        sup_quadratic(&self.hess, &self.lin, self.c)
    }
}

/// Full-space robust identification error form.
pub fn rie_form(s: &SamplePointData, metric: &Metric) -> QuadraticForm {
    let eq = s.e.transpose() * &metric.q;
    let eqf = &eq * &s.f;
    QuadraticForm {
        hess: &eqf + eqf.transpose() + s.g.transpose() * &s.g,
        lin: &eq * &s.eps_x + s.g.transpose() * &s.eps_y,
        c: s.eps_y.norm_squared(),
    }
}

fn frame_of(s: &SamplePointData) -> TransverseFrame {
    s.frame.clone().unwrap_or_else(|| TransverseFrame::full_space(s.e.nrows()))
}

/// Transverse form over `Δ ∈ ℝⁿ⁻¹` (or `ℝⁿ` on degenerate samples, where it
/// coincides with [`rie_form`]).
pub fn trie_form(s: &SamplePointData, metric: &Metric) -> QuadraticForm {
    let fr = frame_of(s);
    let pr = &fr.pi_r;
    let left = pr.transpose() * s.e.transpose() * &metric.q;
    let core = &left * (&s.f + &s.e * &fr.pi_dot) * pr;
    let gp = &s.g * pr;
    QuadraticForm {
        hess: &core + core.transpose() + gp.transpose() * &gp,
        lin: &left * &s.eps_x + gp.transpose() * &s.eps_y,
        c: s.eps_y.norm_squared(),
    }
}

/// `A₊ = (E(I + Π̇) + F)Π^r` and `A₋ = (E(I − Π̇) − F)Π^r`.
pub fn relaxation_maps(e: &DMatrix<f64>, f: &DMatrix<f64>, fr: &TransverseFrame) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = e.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let a_plus = (e * (&id + &fr.pi_dot) + f) * &fr.pi_r;
    let a_minus = (e * (&id - &fr.pi_dot) - f) * &fr.pi_r;
    (a_plus, a_minus)
}

/// Relaxed transverse form (convex in the model and `P`).
pub fn trie_hat_form(s: &SamplePointData, metric: &Metric) -> QuadraticForm {
    let fr = frame_of(s);
    let pr = &fr.pi_r;
    let (ap, am) = relaxation_maps(&s.e, &s.f, &fr);
    let d = &s.g * pr;
    let apq = ap.transpose() * &metric.q;
    let cross = pr.transpose() * &am;
    QuadraticForm {
        hess: (&apq * &ap) * 0.5 + (pr.transpose() * &metric.p * pr) * 0.5 - sym(&cross) + d.transpose() * &d,
        lin: (&apq * &s.eps_x) * 0.5 + (pr.transpose() * &s.eps_x) * 0.5 + d.transpose() * &s.eps_y,
        c: 0.5 * (s.eps_x.transpose() * &metric.q * &s.eps_x)[(0, 0)] + s.eps_y.norm_squared(),
    }
}

/// `|ε_x|² + |ε_y|²`.
pub fn eq_local(s: &SamplePointData) -> f64 {
    s.eps_x.norm_squared() + s.eps_y.norm_squared()
}

pub fn rie_local(s: &SamplePointData, metric: &Metric) -> f64 {
    rie_form(s, metric).sup()
}

pub fn trie_local(s: &SamplePointData, metric: &Metric) -> f64 {
    match &s.frame {
        Some(fr) if !fr.degenerate => trie_form(s, metric).sup(),
        _ => rie_local(s, metric),
    }
}

pub fn trie_hat_local(s: &SamplePointData, metric: &Metric) -> f64 {
    trie_hat_form(s, metric).sup()
}

/// Storage `V(Δ, t) = |E Π Δ|²_Q + |π Δ|²`.
pub fn storage(e: &DMatrix<f64>, frame: &TransverseFrame, q: &DMatrix<f64>, delta: &DVector<f64>) -> f64 {
    let v = e * (&frame.big_pi * delta);
    let t = &frame.pi * delta;
    (v.transpose() * q * &v)[(0, 0)] + t.norm_squared()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Eq,
    Rie,
    Trie,
    TrieHat,
}

impl CostKind {
    pub fn local(self, s: &SamplePointData, metric: &Metric) -> f64 {
        match self {
            CostKind::Eq => eq_local(s),
            CostKind::Rie => rie_local(s, metric),
            CostKind::Trie => trie_local(s, metric),
            CostKind::TrieHat => trie_hat_local(s, metric),
        }
    }
}

/// How per-sample costs are summed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `Σ costᵢ · dt`, approximating the time integral.
    #[default]
    Dt,
    /// Plain `Σ costᵢ`.
    Plain,
}

/// Per-sample costs of one model on one record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalCostBreakdown {
    pub dt: f64,
    pub eq_error: Vec<f64>,
    pub rie_bar: Vec<f64>,
    pub trie_bar: Vec<f64>,
    pub trie_hat: Vec<f64>,
    pub degenerate: Vec<bool>,
}

/// Totals and infinite-sample counts of a [`LocalCostBreakdown`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub samples: usize,
    pub degenerate: usize,
    pub infinite_rie: usize,
    pub infinite_trie: usize,
    pub infinite_trie_hat: usize,
    pub total_eq: f64,
    pub total_rie: f64,
    pub total_trie: f64,
    pub total_trie_hat: f64,
}

fn weighted_sum(vals: &[f64], dt: f64, w: Weighting) -> f64 {
    if vals.iter().any(|v| *v == f64::INFINITY) {
        return f64::INFINITY;
    }
    // sequential left-to-right summation keeps results bit-reproducible
    let s: f64 = vals.iter().sum();
    match w {
        Weighting::Dt => s * dt,
        Weighting::Plain => s,
    }
}

impl LocalCostBreakdown {
    /// Evaluate all four costs at every sample (in parallel, order preserved).
    pub fn compute(data: &[SamplePointData], metric: &Metric, dt: f64) -> Self {
        let rows: Vec<[f64; 4]> = data
            .par_iter()
            .map(|s| [eq_local(s), rie_local(s, metric), trie_local(s, metric), trie_hat_local(s, metric)])
            .collect();
        LocalCostBreakdown {
            dt,
            eq_error: rows.iter().map(|r| r[0]).collect(),
            rie_bar: rows.iter().map(|r| r[1]).collect(),
            trie_bar: rows.iter().map(|r| r[2]).collect(),
            trie_hat: rows.iter().map(|r| r[3]).collect(),
            degenerate: data.iter().map(|s| s.frame.as_ref().is_none_or(|f| f.degenerate)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.eq_error.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eq_error.is_empty()
    }

    pub fn values(&self, kind: CostKind) -> &[f64] {
        match kind {
            CostKind::Eq => &self.eq_error,
            CostKind::Rie => &self.rie_bar,
            CostKind::Trie => &self.trie_bar,
            CostKind::TrieHat => &self.trie_hat,
        }
    }

    pub fn total(&self, kind: CostKind, w: Weighting) -> f64 {
        weighted_sum(self.values(kind), self.dt, w)
    }

    pub fn summary(&self) -> CostSummary {
        let inf = |v: &[f64]| v.iter().filter(|x| !x.is_finite()).count();
        CostSummary {
            samples: self.len(),
            degenerate: self.degenerate.iter().filter(|d| **d).count(),
            infinite_rie: inf(&self.rie_bar),
            infinite_trie: inf(&self.trie_bar),
            infinite_trie_hat: inf(&self.trie_hat),
            total_eq: self.total(CostKind::Eq, Weighting::Dt),
            total_rie: self.total(CostKind::Rie, Weighting::Dt),
            total_trie: self.total(CostKind::Trie, Weighting::Dt),
            total_trie_hat: self.total(CostKind::TrieHat, Weighting::Dt),
        }
    }

    /// `i,eq_error,rie_bar,trie_bar,trie_hat,degenerate,finite` where `finite`
    /// refers to the relaxed transverse cost.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("i,eq_error,rie_bar,trie_bar,trie_hat,degenerate,finite\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{i},{:?},{:?},{:?},{:?},{},{}\n",
                self.eq_error[i],
                self.rie_bar[i],
                self.trie_bar[i],
                self.trie_hat[i],
                self.degenerate[i] as u8,
                self.trie_hat[i].is_finite() as u8
            ));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Summed cost of `kind` over the record; `+∞` if any sample is infinite.
pub fn total_cost(
    record: &TrajectoryRecord,
    frames: &[TransverseFrame],
    spec: &PolyModelSpec,
    coefs: &ModelCoefficients,
    metric: &Metric,
    kind: CostKind,
    weighting: Weighting,
) -> Result<f64> {
    if metric.dim() != spec.n {
        return Err(Error::shape(format!("metric is {0}x{0}, model has n = {1}", metric.dim(), spec.n)));
    }
    let data = sample_data(spec, coefs, record, Some(frames))?;
    let vals: Vec<f64> = data.par_iter().map(|s| kind.local(s, metric)).collect();
    Ok(weighted_sum(&vals, record.dt, weighting))
}
