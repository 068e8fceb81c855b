use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{RawSeries, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::simulate::rk4_step;

/// Reference oscillators used to generate test data. All are 2-state with a
/// scalar input entering the second (or, for FitzHugh–Nagumo, first) state.
///
/// Step-size guidance for the internal RK4 step `h = dt / substeps`:
/// Van der Pol needs `h·max(1, μ) ≲ 0.1`, the linear oscillator
/// `h·ω ≲ 0.1`, FitzHugh–Nagumo `h ≲ 0.1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticSystem {
    VanDerPol { mu: f64 },
    FitzhughNagumo { a: f64, b: f64, tau: f64, current: f64 },
    LinearOsc { omega: f64, zeta: f64 },
}

impl SyntheticSystem {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SyntheticSystem::VanDerPol { mu } => mu.is_finite() && mu >= 0.0,
            SyntheticSystem::FitzhughNagumo { a, b, tau, current } => {
                a.is_finite() && b.is_finite() && current.is_finite() && tau > 0.0 && tau.is_finite()
            }
            SyntheticSystem::LinearOsc { omega, zeta } => omega > 0.0 && omega.is_finite() && zeta.is_finite() && zeta >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid synthetic system parameters {self:?}")))
        }
    }

    pub fn default_x0(&self) -> Vec<f64> {
        match self {
            SyntheticSystem::VanDerPol { .. } => vec![2.0, 0.0],
            SyntheticSystem::FitzhughNagumo { .. } => vec![-1.0, 1.0],
            SyntheticSystem::LinearOsc { .. } => vec![1.0, 0.0],
        }
    }

    /// Largest stable internal step for fixed-step RK4 (with margin).
    fn max_step(&self) -> f64 {
        match *self {
            SyntheticSystem::VanDerPol { mu } => 0.1 / mu.max(1.0),
            SyntheticSystem::FitzhughNagumo { .. } => 0.1,
            SyntheticSystem::LinearOsc { omega, .. } => 0.1 / omega,
        }
    }

    pub fn rhs(&self, x: &[f64], u: f64) -> Vec<f64> {
        match *self {
            SyntheticSystem::VanDerPol { mu } => vec![x[1], mu * (1.0 - x[0] * x[0]) * x[1] - x[0] + u],
            SyntheticSystem::FitzhughNagumo { a, b, tau, current } => vec![
                x[0] - x[0].powi(3) / 3.0 - x[1] + current + u,
                (x[0] + a - b * x[1]) / tau,
            ],
            SyntheticSystem::LinearOsc { omega, zeta } => {
                vec![x[1], -omega * omega * x[0] - 2.0 * zeta * omega * x[1] + u]
            }
        }
    }

    /// `(∂f/∂x, ∂f/∂u)`.
    pub fn jacobians(&self, x: &[f64]) -> ([[f64; 2]; 2], [f64; 2]) {
        match *self {
            SyntheticSystem::VanDerPol { mu } => (
                [[0.0, 1.0], [-2.0 * mu * x[0] * x[1] - 1.0, mu * (1.0 - x[0] * x[0])]],
                [0.0, 1.0],
            ),
            SyntheticSystem::FitzhughNagumo { b, tau, .. } => {
                ([[1.0 - x[0] * x[0], -1.0], [1.0 / tau, -b / tau]], [1.0, 0.0])
            }
            SyntheticSystem::LinearOsc { omega, zeta } => {
                ([[0.0, 1.0], [-omega * omega, -2.0 * zeta * omega]], [0.0, 1.0])
            }
        }
    }
}

/// Scalar input signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forcing {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// Piecewise constant: `levels[k]` holds from `times[k]` on; 0 before `times[0]`.
    Steps {
        times: Vec<f64>,
        levels: Vec<f64>,
    },
    /// `Σ amplitude·sin(2π·frequency·t + phase)`.
    Multisine {
        amplitudes: Vec<f64>,
        frequencies: Vec<f64>,
        phases: Vec<f64>,
    },
}

impl Forcing {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Constant { value } => *value,
            Forcing::Steps { times, levels } => times
                .iter()
                .zip(levels)
                .take_while(|(ts, _)| **ts <= t)
                .last()
                .map_or(0.0, |(_, l)| *l),
            Forcing::Multisine {
                amplitudes,
                frequencies,
                phases,
            } => amplitudes
                .iter()
                .zip(frequencies)
                .zip(phases)
                .map(|((a, f), p)| a * (std::f64::consts::TAU * f * t + p).sin())
                .sum(),
        }
    }

    /// Time derivative (zero away from step discontinuities).
    pub fn rate(&self, t: f64) -> f64 {
        match self {
            Forcing::Multisine {
                amplitudes,
                frequencies,
                phases,
            } => amplitudes
                .iter()
                .zip(frequencies)
                .zip(phases)
                .map(|((a, f), p)| {
                    let w = std::f64::consts::TAU * f;
                    a * w * (w * t + p).cos()
                })
                .sum(),
            _ => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Forcing::Zero => true,
            Forcing::Constant { value } => value.is_finite(),
            Forcing::Steps { times, levels } => times.len() == levels.len() && times.windows(2).all(|w| w[0] < w[1]),
            Forcing::Multisine {
                amplitudes,
                frequencies,
                phases,
            } => amplitudes.len() == frequencies.len() && amplitudes.len() == phases.len(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid forcing {self:?}")))
        }
    }
}

/// Description of a synthetic experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRun {
    pub system: SyntheticSystem,
    #[serde(default)]
    pub forcing: Forcing,
    /// Defaults to [`SyntheticSystem::default_x0`].
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    pub duration: f64,
    pub dt: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
    /// RK4 steps per sample interval; `0` picks the smallest count meeting the
    /// per-system step bound (at least 10).
    #[serde(default)]
    pub substeps: usize,
}

impl SyntheticRun {
    pub fn new(system: SyntheticSystem, duration: f64, dt: f64) -> Self {
        SyntheticRun {
            system,
            forcing: Forcing::Zero,
            x0: None,
            duration,
            dt,
            noise_std: 0.0,
            seed: 0,
            substeps: 0,
        }
    }
}

/// Integrate the reference system and sample it. Returns the measured raw
/// series (`y = x₁` plus optional Gaussian noise) and the noiseless
/// ground-truth record with exact `ẋ` and `ẍ`.
pub fn gen_synthetic(run: &SyntheticRun) -> Result<(RawSeries, TrajectoryRecord)> {
    run.system.validate()?;
    run.forcing.validate()?;
    if !(run.dt > 0.0 && run.duration > 0.0 && run.dt.is_finite() && run.duration.is_finite()) {
        return Err(Error::InvalidConfig("duration and dt must be positive".into()));
    }
    if !(run.noise_std >= 0.0 && run.noise_std.is_finite()) {
        return Err(Error::InvalidConfig("noise_std must be >= 0".into()));
    }
    let steps = (run.duration / run.dt).round() as usize;
    if steps < 2 {
        return Err(Error::InvalidConfig("duration must cover at least 2 steps".into()));
    }
    let substeps = if run.substeps > 0 {
        run.substeps
    } else {
        ((run.dt / run.system.max_step()).ceil() as usize).max(10)
    };
    let h = run.dt / substeps as f64;
    if h > run.system.max_step() {
        return Err(Error::InvalidConfig(format!(
            "internal step {h} exceeds the stability bound {} for {:?}",
            run.system.max_step(),
            run.system
        )));
    }
    let mut x = run.x0.clone().unwrap_or_else(|| run.system.default_x0());
    if x.len() != 2 || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("x0 must be a finite 2-vector".into()));
    }

    let sys = &run.system;
    let forcing = &run.forcing;
    let n = steps + 1;
    let mut rec = TrajectoryRecord {
        dt: run.dt,
        t0: 0.0,
        x: Vec::with_capacity(n),
        xdot: Vec::with_capacity(n),
        xddot: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
    };
    for i in 0..n {
        let t = i as f64 * run.dt;
        let u = forcing.value(t);
        let xd = sys.rhs(&x, u);
        let (j, b) = sys.jacobians(&x);
        let ud = forcing.rate(t);
        let xdd = vec![
            j[0][0] * xd[0] + j[0][1] * xd[1] + b[0] * ud,
            j[1][0] * xd[0] + j[1][1] * xd[1] + b[1] * ud,
        ];
        rec.x.push(x.clone());
        rec.xdot.push(xd);
        rec.xddot.push(xdd);
        rec.u.push(vec![u]);
        rec.y.push(vec![x[0]]);
        if i + 1 < n {
            for s in 0..substeps {
                let ts = t + s as f64 * h;
                x = rk4_step(|tt, xx| sys.rhs(xx, forcing.value(tt)), ts, &x, h);
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("reference system diverged at t = {}", t + run.dt)));
            }
        }
    }

    let mut outputs = rec.y.clone();
    if run.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
        let normal = Normal::new(0.0, run.noise_std).expect("valid std");
        for row in &mut outputs {
            for v in row.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    let raw = RawSeries {
        times: (0..n).map(|i| i as f64 * run.dt).collect(),
        inputs: rec.u.clone(),
        outputs,
    };
    Ok((raw, rec))
}
