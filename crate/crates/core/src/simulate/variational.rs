use nalgebra::{DMatrix, DVector};

use super::half_step_interp;
use crate::error::{Error, Result};
use crate::geometry::TransverseFrame;
use crate::linalg::condition_number;
use crate::model::{sample_data, ModelCoefficients, PolyModelSpec};
use crate::trajectory::TrajectoryRecord;

/// Linearized deviation along a data record.
#[derive(Clone, Debug)]
pub struct VariationalRun {
    /// `Δ(t)` at each sample.
    pub delta: Vec<DVector<f64>>,
    /// `Δ̄(t) = Π(t) Δ(t)`.
    pub delta_bar: Vec<DVector<f64>>,
    /// `|G Δ + ε_y|²` per sample.
    pub output_dev: Vec<f64>,
    /// `|G Δ̄ + ε_y|²` per sample.
    pub orbital_output_dev: Vec<f64>,
    /// Storage `V(Δ̄(t), t) = |E Π Δ̄|²_Q + |π Δ̄|²` per sample.
    pub storage: Vec<f64>,
    /// Linearized simulation error `∫|GΔ + ε_y|² dt`.
    pub lin_error: f64,
    /// Linearized orbital simulation error `∫|GΔ̄ + ε_y|² dt`.
    pub lin_orbital_error: f64,
}

/// Integrate `d/dt (E(x̃(t)) Δ) = F Δ + ε_x` with `Δ(0) = 0` along the
/// record and evaluate the linearized error measures and the transverse
/// storage function.
///
/// The state integrated is `w = E Δ`, with RK4 on the sample grid; the
/// half-step coefficients come from cubic interpolation of the sampled
/// `E`, `F` and `ε_x`, so the scheme stays fourth order in `dt`.
pub fn variational_run(
    spec: &PolyModelSpec,
    coefs: &ModelCoefficients,
    record: &TrajectoryRecord,
    frames: &[TransverseFrame],
    metric_q: &DMatrix<f64>,
) -> Result<VariationalRun> {
    record.validate()?;
    let data = sample_data(spec, coefs, record, None)?;
    let n = spec.n;
    let ns = record.len();
    if frames.len() != ns {
        return Err(Error::shape(format!("{} frames for {ns} samples", frames.len())));
    }
    let es: Vec<DMatrix<f64>> = data.iter().map(|d| d.e.clone()).collect();
    let fs: Vec<DMatrix<f64>> = data.iter().map(|d| d.f.clone()).collect();
    let eps: Vec<DMatrix<f64>> = data
        .iter()
        .map(|d| DMatrix::from_column_slice(n, 1, d.eps_x.as_slice()))
        .collect();

    let rate_map = |e: &DMatrix<f64>, f: &DMatrix<f64>, t: f64| -> Result<DMatrix<f64>> {
        if !(condition_number(e) <= 1e12) {
            return Err(Error::SingularJacobian { t });
        }
        let einv = e.clone().try_inverse().ok_or(Error::SingularJacobian { t })?;
        Ok(f * einv)
    };
    let mut maps = Vec::with_capacity(ns);
    for i in 0..ns {
        maps.push(rate_map(&es[i], &fs[i], record.time(i))?);
    }

    let h = record.dt;
    let mut w = DVector::zeros(n);
    let mut ws = Vec::with_capacity(ns);
    ws.push(w.clone());
    for i in 0..ns - 1 {
        let e_h = half_step_interp(&es, i);
        let f_h = half_step_interp(&fs, i);
        let eps_h = half_step_interp(&eps, i).column(0).into_owned();
        let m_h = rate_map(&e_h, &f_h, record.time(i) + 0.5 * h)?;
        let eps_i = eps[i].column(0).into_owned();
        let eps_j = eps[i + 1].column(0).into_owned();
        let k1 = &maps[i] * &w + &eps_i;
        let k2 = &m_h * (&w + &k1 * (0.5 * h)) + &eps_h;
        let k3 = &m_h * (&w + &k2 * (0.5 * h)) + &eps_h;
        let k4 = &maps[i + 1] * (&w + &k3 * h) + &eps_j;
        w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        ws.push(w.clone());
    }

    let mut delta = Vec::with_capacity(ns);
    let mut delta_bar = Vec::with_capacity(ns);
    let mut output_dev = Vec::with_capacity(ns);
    let mut orbital_output_dev = Vec::with_capacity(ns);
    let mut storage = Vec::with_capacity(ns);
    for i in 0..ns {
        let d = es[i]
            .clone()
            .lu()
            .solve(&ws[i])
            .ok_or(Error::SingularJacobian { t: record.time(i) })?;
        let fr = &frames[i];
        let db = &fr.big_pi * &d;
        let out = &data[i].g * &d + &data[i].eps_y;
        let out_bar = &data[i].g * &db + &data[i].eps_y;
        let v = &es[i] * (&fr.big_pi * &db);
        let tang = &fr.pi * &db;
        storage.push((v.transpose() * metric_q * &v)[(0, 0)] + tang.norm_squared());
        output_dev.push(out.norm_squared());
        orbital_output_dev.push(out_bar.norm_squared());
        delta.push(d);
        delta_bar.push(db);
    }
    let trap = |v: &[f64]| -> f64 {
        let inner: f64 = v[1..v.len() - 1].iter().sum();
        h * (inner + 0.5 * (v[0] + v[v.len() - 1]))
    };
    Ok(VariationalRun {
        lin_error: trap(&output_dev),
        lin_orbital_error: trap(&orbital_output_dev),
        delta,
        delta_bar,
        output_dev,
        orbital_output_dev,
        storage,
    })
}
