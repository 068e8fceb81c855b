//! Open-loop simulation of identified implicit models and the error
//! measures used to judge them.

mod errors;
mod variational;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use errors::{orbital_sim_error, sim_error, write_traces_csv, ErrorMetrics};
pub use variational::{variational_run, VariationalRun};

use crate::error::{Error, Result};
use crate::linalg::condition_number;
use crate::model::{eval_f, eval_g, jacobian_e, ModelCoefficients, PolyModelSpec};
use crate::trajectory::TrajectoryRecord;

/// One classical fourth-order Runge–Kutta step of `ẋ = rhs(t, x)`.
pub fn rk4_step(rhs: impl Fn(f64, &[f64]) -> Vec<f64>, t: f64, x: &[f64], h: f64) -> Vec<f64> {
    let axpy = |a: &[f64], s: f64, b: &[f64]| a.iter().zip(b).map(|(p, q)| p + s * q).collect::<Vec<_>>();
    let k1 = rhs(t, x);
    let k2 = rhs(t + 0.5 * h, &axpy(x, 0.5 * h, &k1));
    let k3 = rhs(t + 0.5 * h, &axpy(x, 0.5 * h, &k2));
    let k4 = rhs(t + h, &axpy(x, h, &k3));
    x.iter()
        .enumerate()
        .map(|(i, xi)| xi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Halt with [`SimStatus::Diverged`] once `|x|` exceeds this.
    pub divergence_radius: f64,
    /// Halt with [`SimStatus::SingularE`] when `cond(E(x))` exceeds this.
    pub cond_limit: f64,
    /// RK4 steps per input sample interval.
    pub substeps: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            divergence_radius: 1e6,
            cond_limit: 1e12,
            substeps: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SimStatus {
    Completed,
    Diverged { t: f64 },
    SingularE { t: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub status: SimStatus,
}

impl SimResult {
    pub fn completed(&self) -> bool {
        self.status == SimStatus::Completed
    }
}

enum Stage {
    Ok(Vec<f64>),
    Singular,
}

fn explicit_rhs(spec: &PolyModelSpec, coefs: &ModelCoefficients, x: &[f64], u: &[f64], cond_limit: f64) -> Stage {
    let (Ok(e), Ok(f)) = (jacobian_e(spec, coefs, x), eval_f(spec, coefs, x, u)) else {
        return Stage::Singular;
    };
    if !(condition_number(&e) <= cond_limit) {
        return Stage::Singular;
    }
    match e.lu().solve(&f) {
        Some(v) if v.iter().all(|c| c.is_finite()) => Stage::Ok(v.iter().copied().collect()),
        _ => Stage::Singular,
    }
}

fn lerp_input(inputs: &[Vec<f64>], dt: f64, t: f64) -> Vec<f64> {
    let n = inputs.len();
    let s = (t / dt).clamp(0.0, (n - 1) as f64);
    let k = (s.floor() as usize).min(n.saturating_sub(2));
    let w = s - k as f64;
    if n == 1 {
        return inputs[0].clone();
    }
    inputs[k].iter().zip(&inputs[k + 1]).map(|(a, b)| a + w * (b - a)).collect()
}

/// Fixed-step RK4 on `ẋ = E(x)⁻¹ f(x, u)` from `x0` over the span of the
/// input samples `inputs` (spacing `dt`, linearly interpolated between
/// samples). Each stage solves `E(x) ẋ = f(x, u)` by LU.
pub fn simulate(
    spec: &PolyModelSpec,
    coefs: &ModelCoefficients,
    x0: &[f64],
    inputs: &[Vec<f64>],
    dt: f64,
    opts: &SimOptions,
) -> SimResult {
    let n_samples = inputs.len();
    let sub = opts.substeps.max(1);
    let h = dt / sub as f64;
    let mut res = SimResult {
        times: Vec::with_capacity(n_samples),
        states: Vec::with_capacity(n_samples),
        outputs: Vec::with_capacity(n_samples),
        status: SimStatus::Completed,
    };
    let mut x = x0.to_vec();
    let output = |x: &[f64], u: &[f64]| -> Vec<f64> {
        eval_g(spec, coefs, x, u).map(|v| v.iter().copied().collect()).unwrap_or_default()
    };
    if let Stage::Singular = explicit_rhs(spec, coefs, &x, &inputs[0], opts.cond_limit) {
        res.times.push(0.0);
        res.states.push(x.clone());
        res.outputs.push(output(&x, &inputs[0]));
        res.status = SimStatus::SingularE { t: 0.0 };
        return res;
    }
    for i in 0..n_samples {
        let t = i as f64 * dt;
        res.times.push(t);
        res.states.push(x.clone());
        res.outputs.push(output(&x, &inputs[i]));
        if i + 1 == n_samples {
            break;
        }
        for s in 0..sub {
            let ts = t + s as f64 * h;
            let singular = std::cell::Cell::new(false);
            let next = rk4_step(
                |tt, xx| match explicit_rhs(spec, coefs, xx, &lerp_input(inputs, dt, tt), opts.cond_limit) {
                    Stage::Ok(v) => v,
                    Stage::Singular => {
                        singular.set(true);
                        vec![0.0; xx.len()]
                    }
                },
                ts,
                &x,
                h,
            );
            if singular.get() {
                res.status = SimStatus::SingularE { t: ts };
                return res;
            }
            let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm <= opts.divergence_radius) {
                res.status = SimStatus::Diverged { t: ts + h };
                return res;
            }
            x = next;
        }
    }
    res
}

/// Four-point cubic interpolation of a sampled matrix-valued signal at the
/// half-sample `i + ½`, one-sided near the ends.
pub(crate) fn half_step_interp(samples: &[DMatrix<f64>], i: usize) -> DMatrix<f64> {
    let n = samples.len();
    if n < 4 {
        return (&samples[i] + &samples[(i + 1).min(n - 1)]) * 0.5;
    }
    let (base, w): (usize, [f64; 4]) = if i == 0 {
        (0, [5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0])
    } else if i + 2 >= n {
        (n - 4, [1.0 / 16.0, -5.0 / 16.0, 15.0 / 16.0, 5.0 / 16.0])
    } else {
        (i - 1, [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0])
    };
    let mut out = &samples[base] * w[0];
    for k in 1..4 {
        out += &samples[base + k] * w[k];
    }
    out
}

/// Data record of the model's own trajectory from `x0` under `inputs`:
/// exact `ẋ = E⁻¹f` at every sample and `ẍ` by a central difference of the
/// vector field along the flow (`O(h²)` with `h = 1e-5`, the input rate
/// taken from the sampled input).
pub fn simulate_record(
    spec: &PolyModelSpec,
    coefs: &ModelCoefficients,
    x0: &[f64],
    inputs: &[Vec<f64>],
    dt: f64,
    substeps: usize,
) -> Result<TrajectoryRecord> {
    let opts = SimOptions {
        substeps,
        ..SimOptions::default()
    };
    let sim = simulate(spec, coefs, x0, inputs, dt, &opts);
    if !sim.completed() {
        return Err(Error::InvalidData(format!("generator simulation stopped: {:?}", sim.status)));
    }
    let field = |x: &[f64], u: &[f64]| -> Result<DVector<f64>> {
        match explicit_rhs(spec, coefs, x, u, opts.cond_limit) {
            Stage::Ok(v) => Ok(DVector::from_vec(v)),
            Stage::Singular => Err(Error::SingularJacobian { t: f64::NAN }),
        }
    };
    let ns = inputs.len();
    let h = 1e-5;
    let mut rec = TrajectoryRecord {
        dt,
        t0: 0.0,
        x: sim.states.clone(),
        xdot: Vec::with_capacity(ns),
        xddot: Vec::with_capacity(ns),
        u: inputs.to_vec(),
        y: sim.outputs.clone(),
    };
    for i in 0..ns {
        let x = &sim.states[i];
        let u = &inputs[i];
        let v = field(x, u)?;
        let (lo, hi) = (i.saturating_sub(1), (i + 1).min(ns - 1));
        let du: Vec<f64> = (0..u.len())
            .map(|j| (inputs[hi][j] - inputs[lo][j]) / ((hi - lo).max(1) as f64 * dt))
            .collect();
        let shift = |s: f64| -> (Vec<f64>, Vec<f64>) {
            let xs = x.iter().zip(v.iter()).map(|(a, b)| a + s * h * b).collect();
            let us = u.iter().zip(&du).map(|(a, b)| a + s * h * b).collect();
            (xs, us)
        };
        let (xp, up) = shift(1.0);
        let (xm, um) = shift(-1.0);
        let acc = (field(&xp, &up)? - field(&xm, &um)?) / (2.0 * h);
        rec.xdot.push(v.iter().copied().collect());
        rec.xddot.push(acc.iter().copied().collect());
    }
    Ok(rec)
}
