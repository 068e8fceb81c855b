use std::path::Path;

use serde::Serialize;

use super::SimResult;
use crate::error::{Error, Result};
use crate::trajectory::TrajectoryRecord;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn trapezoid(vals: &[f64], dt: f64) -> f64 {
    if vals.len() < 2 {
        return 0.0;
    }
    let inner: f64 = vals[1..vals.len() - 1].iter().sum();
    dt * (inner + 0.5 * (vals[0] + vals[vals.len() - 1]))
}

fn check_pair(sim: &SimResult, reference: &TrajectoryRecord) -> Result<usize> {
    let p = reference.p();
    if sim.outputs.first().is_some_and(|o| o.len() != p) {
        return Err(Error::shape(format!(
            "simulation has {} outputs, reference has {p}",
            sim.outputs[0].len()
        )));
    }
    if sim.times.len() >= 2 {
        let dt = sim.times[1] - sim.times[0];
        if (dt - reference.dt).abs() > 1e-9 * reference.dt {
            return Err(Error::shape(format!("simulation dt {dt} differs from reference dt {}", reference.dt)));
        }
    }
    Ok(sim.times.len().min(reference.len()))
}

/// Simulation error `∫|y(t) − ỹ(t)|² dt` by the trapezoidal rule over the
/// common horizon. Simulations that stopped early (diverged or hit a singular
/// `E`) score `+∞`.
pub fn sim_error(sim: &SimResult, reference: &TrajectoryRecord) -> Result<f64> {
    let n = check_pair(sim, reference)?;
    if !sim.completed() {
        return Ok(f64::INFINITY);
    }
    let d: Vec<f64> = (0..n).map(|i| sq_dist(&sim.outputs[i], &reference.y[i])).collect();
    Ok(trapezoid(&d, reference.dt))
}

/// Simulation and orbital simulation errors with their traces.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorMetrics {
    pub sim_error: f64,
    pub orbital_sim_error: f64,
    /// `|y(t) − ỹ(t)|²` per sample.
    pub deviation: Vec<f64>,
    /// `|y(t) − ỹ(τ(t))|²` per sample.
    pub orbital_deviation: Vec<f64>,
    /// Matched reference time `τ(t)` per sample.
    pub tau: Vec<f64>,
}

/// Orbital simulation error `∫|y(t) − ỹ(τ(t))|² dt` where `τ(t)` is the
/// reference time whose state is closest to the simulated state.
///
/// `τ` comes from a global nearest-sample search (ties go to the earliest
/// sample), refined by a parabola through the squared distances of the
/// neighbouring samples. The refinement is kept only when the linearly
/// interpolated reference state is no farther than the best sample.
pub fn orbital_sim_error(sim: &SimResult, reference: &TrajectoryRecord) -> Result<ErrorMetrics> {
    let n = check_pair(sim, reference)?;
    if sim.states.first().is_some_and(|s| s.len() != reference.n()) {
        return Err(Error::shape("simulated state dimension differs from reference"));
    }
    let nr = reference.len();
    let dt = reference.dt;
    let mut deviation = Vec::with_capacity(n);
    let mut orbital = Vec::with_capacity(n);
    let mut tau = Vec::with_capacity(n);
    for i in 0..n {
        let x = &sim.states[i];
        let y = &sim.outputs[i];
        deviation.push(sq_dist(y, &reference.y[i]));

        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, xr) in reference.x.iter().enumerate() {
            let d = sq_dist(x, xr);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        let mut pos = best as f64;
        if best > 0 && best + 1 < nr {
            let dm = sq_dist(x, &reference.x[best - 1]);
            let dp = sq_dist(x, &reference.x[best + 1]);
            let curv = dm - 2.0 * best_d + dp;
            if curv > 0.0 {
                let off = (0.5 * (dm - dp) / curv).clamp(-0.5, 0.5);
                let cand = best as f64 + off;
                if sq_dist(x, &interp(&reference.x, cand)) <= best_d {
                    pos = cand;
                }
            }
        }
        tau.push(reference.time(0) + pos * dt);
        orbital.push(sq_dist(y, &interp(&reference.y, pos)));
    }
    let complete = sim.completed();
    Ok(ErrorMetrics {
        sim_error: if complete { trapezoid(&deviation, dt) } else { f64::INFINITY },
        orbital_sim_error: if complete { trapezoid(&orbital, dt) } else { f64::INFINITY },
        deviation,
        orbital_deviation: orbital,
        tau,
    })
}

fn interp(rows: &[Vec<f64>], pos: f64) -> Vec<f64> {
    let k = (pos.floor() as usize).min(rows.len() - 1);
    let w = pos - k as f64;
    if w == 0.0 || k + 1 >= rows.len() {
        return rows[k].clone();
    }
    rows[k].iter().zip(&rows[k + 1]).map(|(a, b)| a + w * (b - a)).collect()
}

/// Plot-ready traces: `t,y_model1..,y_ref1..,deviation,orbital_deviation,tau`.
pub fn write_traces_csv(path: &Path, sim: &SimResult, reference: &TrajectoryRecord, metrics: &ErrorMetrics) -> Result<()> {
    let p = reference.p();
    let mut out = String::from("t");
    for j in 0..p {
        out.push_str(&format!(",y_model{}", j + 1));
    }
    for j in 0..p {
        out.push_str(&format!(",y_ref{}", j + 1));
    }
    out.push_str(",deviation,orbital_deviation,tau\n");
    for i in 0..metrics.tau.len() {
        out.push_str(&format!("{:?}", reference.time(i)));
        for v in sim.outputs[i].iter().chain(&reference.y[i]) {
            out.push_str(&format!(",{v:?}"));
        }
        out.push_str(&format!(
            ",{:?},{:?},{:?}\n",
            metrics.deviation[i], metrics.orbital_deviation[i], metrics.tau[i]
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
