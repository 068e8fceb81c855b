//! Trajectory data: ingestion, synthetic generation, smoothing and
//! differentiation, and Laguerre-filter state augmentation.

mod csvio;
mod laguerre;
mod smoothing;
mod synthetic;

use serde::{Deserialize, Serialize};

pub use csvio::{load_csv, load_record_csv, parse_csv, parse_record_csv, write_raw_csv, write_record_csv};
pub use laguerre::{laguerre_matrices, laguerre_states, LaguerreOutput};
pub use smoothing::smooth_and_differentiate;
pub use synthetic::{gen_synthetic, Forcing, SyntheticRun, SyntheticSystem};

use crate::error::{Error, Result};

/// Raw sampled input/output data `{t, ũ(t), ỹ(t)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSeries {
    pub times: Vec<f64>,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

impl RawSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn m(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn p(&self) -> usize {
        self.outputs.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if self.inputs.len() != n || self.outputs.len() != n {
            return Err(Error::InvalidData("times, inputs and outputs differ in length".into()));
        }
        let (m, p) = (self.m(), self.p());
        for i in 0..n {
            if self.inputs[i].len() != m || self.outputs[i].len() != p {
                return Err(Error::InvalidData(format!("ragged row {}", i + 1)));
            }
            if !self.times[i].is_finite() {
                return Err(Error::NonFinite { column: "t".into(), row: i + 1 });
            }
            if i > 0 && self.times[i] <= self.times[i - 1] {
                return Err(Error::NonMonotoneTime { row: i + 1 });
            }
        }
        Ok(())
    }

    /// Output channel `j` as a vector.
    pub fn output_channel(&self, j: usize) -> Vec<f64> {
        self.outputs.iter().map(|r| r[j]).collect()
    }

    pub fn is_uniform(&self) -> bool {
        if self.len() < 3 {
            return true;
        }
        let dt = (self.times[self.len() - 1] - self.times[0]) / (self.len() - 1) as f64;
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-300))
    }

    /// Linear-interpolation resampling onto a uniform grid with the same
    /// endpoints and sample count.
    pub fn resample_uniform(&self) -> RawSeries {
        let n = self.len();
        if n < 2 || self.is_uniform() {
            return self.clone();
        }
        let t0 = self.times[0];
        let dt = (self.times[n - 1] - t0) / (n - 1) as f64;
        let mut times = Vec::with_capacity(n);
        let mut inputs = Vec::with_capacity(n);
        let mut outputs = Vec::with_capacity(n);
        let mut k = 0;
        for i in 0..n {
            let t = if i == n - 1 { self.times[n - 1] } else { t0 + dt * i as f64 };
            while k + 2 < n && self.times[k + 1] < t {
                k += 1;
            }
            let (ta, tb) = (self.times[k], self.times[k + 1]);
            let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
            let lerp = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect::<Vec<_>>();
            times.push(t);
            inputs.push(lerp(&self.inputs[k], &self.inputs[k + 1]));
            outputs.push(lerp(&self.outputs[k], &self.outputs[k + 1]));
        }
        RawSeries { times, inputs, outputs }
    }

    pub fn dt(&self) -> f64 {
        (self.times[self.len() - 1] - self.times[0]) / (self.len() - 1) as f64
    }
}

/// Uniformly sampled state/derivative/input/output record.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub dt: f64,
    /// Time of the first sample.
    pub t0: f64,
    pub x: Vec<Vec<f64>>,
    pub xdot: Vec<Vec<f64>>,
    /// Second derivative estimate; only the geometry uses it.
    pub xddot: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn m(&self) -> usize {
        self.u.first().map_or(0, Vec::len)
    }

    pub fn p(&self) -> usize {
        self.y.first().map_or(0, Vec::len)
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.len().saturating_sub(1)) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n < 3 {
            return Err(Error::InvalidData(format!("record needs at least 3 samples, has {n}")));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidData(format!("dt must be positive, got {}", self.dt)));
        }
        for (name, arr, width) in [
            ("x", &self.x, self.n()),
            ("xdot", &self.xdot, self.n()),
            ("xddot", &self.xddot, self.n()),
            ("u", &self.u, self.m()),
            ("y", &self.y, self.p()),
        ] {
            if arr.len() != n {
                return Err(Error::InvalidData(format!("{name} has {} samples, x has {n}", arr.len())));
            }
            for (i, row) in arr.iter().enumerate() {
                if row.len() != width {
                    return Err(Error::InvalidData(format!("{name} row {i} has width {}", row.len())));
                }
                if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        column: format!("{name}{}", j + 1),
                        row: i,
                    });
                }
            }
        }
        Ok(())
    }

    /// Sub-record over samples `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> TrajectoryRecord {
        TrajectoryRecord {
            dt: self.dt,
            t0: self.time(range.start),
            x: self.x[range.clone()].to_vec(),
            xdot: self.xdot[range.clone()].to_vec(),
            xddot: self.xddot[range.clone()].to_vec(),
            u: self.u[range.clone()].to_vec(),
            y: self.y[range].to_vec(),
        }
    }
}

/// Continuous-time Laguerre filter bank with `order` identical poles at `−pole`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaguerreBank {
    pub pole: f64,
    pub order: usize,
}

impl LaguerreBank {
    pub fn new(pole: f64, order: usize) -> Result<Self> {
        let b = LaguerreBank { pole, order };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pole > 0.0 && self.pole.is_finite()) {
            return Err(Error::InvalidConfig(format!("Laguerre pole must be > 0, got {}", self.pole)));
        }
        if self.order < 1 {
            return Err(Error::InvalidConfig("Laguerre order must be >= 1".into()));
        }
        Ok(())
    }
}

/// Local polynomial (Savitzky–Golay type) smoother settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub window: usize,
    pub poly_degree: usize,
}

impl SmootherConfig {
    pub fn new(window: usize, poly_degree: usize) -> Result<Self> {
        let c = SmootherConfig { window, poly_degree };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 5 || self.window % 2 == 0 {
            return Err(Error::InvalidConfig(format!("smoother window must be odd and >= 5, got {}", self.window)));
        }
        if self.poly_degree < 2 || self.poly_degree >= self.window {
            return Err(Error::InvalidConfig(format!(
                "smoother degree must be in [2, window), got {}",
                self.poly_degree
            )));
        }
        Ok(())
    }
}

/// Settings used to turn raw input/output data into a state record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateBuilder {
    pub bank: LaguerreBank,
    pub smoother: SmootherConfig,
}

/// Build the state record `x̃ = [smoothed outputs; Laguerre states of each
/// output]`, so `n = p + order·p`.
///
/// Output rates come from the smoother's analytic derivative, Laguerre rates
/// from the filter state equation; `ẍ̃` re-applies the smoother derivative
/// to the `ẋ̃` channels.
pub fn build_state(raw: &RawSeries, bank: &LaguerreBank, cfg: &SmootherConfig) -> Result<TrajectoryRecord> {
    raw.validate()?;
    bank.validate()?;
    cfg.validate()?;
    let raw = raw.resample_uniform();
    let n_samples = raw.len();
    if n_samples < 3 {
        return Err(Error::InvalidData("need at least 3 samples".into()));
    }
    let dt = raw.dt();
    let p = raw.p();
    let n = p + bank.order * p;

    let mut channels: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut rates: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut filtered = Vec::with_capacity(p);
    for j in 0..p {
        let (s, d) = smooth_and_differentiate(&raw.output_channel(j), dt, cfg)?;
        channels.push(s.clone());
        rates.push(d);
        filtered.push(s);
    }
    for s in &filtered {
        let lag = laguerre_states(s, dt, bank)?;
        channels.extend(lag.states);
        rates.extend(lag.rates);
    }
    let mut accel = Vec::with_capacity(n);
    for r in &rates {
        accel.push(smooth_and_differentiate(r, dt, cfg)?.1);
    }
    let rowwise = |cols: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..n_samples).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
    };
    let rec = TrajectoryRecord {
        dt,
        t0: raw.times[0],
        x: rowwise(&channels),
        xdot: rowwise(&rates),
        xddot: rowwise(&accel),
        u: raw.inputs.clone(),
        y: raw.outputs.clone(),
    };
    rec.validate()?;
    Ok(rec)
}
