//! Fit reports: solver diagnostics, per-sample cost summary, simulation
//! metrics on training and held-out data, and the bound chain
//! `𝓔⊥ ≤ ∫Ē⊥ ≤ ∫Ê⊥`.
//!
//! Written as pretty JSON with the schema of [`FitReport`].

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::TransverseFrame;
use crate::model::{sample_data, ModelCoefficients, PolyModelSpec};
use crate::objective::{CostKind, CostSummary, LocalCostBreakdown, Metric, Weighting};
use crate::sdp::{FitKind, FitOutcome, ProgramStats, SolveStatus};
use crate::simulate::{orbital_sim_error, simulate, variational_run, ErrorMetrics, SimOptions, SimResult, SimStatus};
use crate::trajectory::TrajectoryRecord;

pub const REPORT_FORMAT: &str = "trie-report/1";

/// Relative slack allowed in each link of the bound chain.
pub const BOUND_CHAIN_SLACK: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverSummary {
    pub status: SolveStatus,
    pub backend: String,
    pub detail: String,
    pub iterations: u32,
    pub solve_time_s: f64,
    pub worst_block_violation: f64,
    pub max_equality_residual: f64,
}

/// Open-loop simulation from `x̃(0)` with the recorded input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimSummary {
    pub horizon_s: f64,
    pub samples: usize,
    pub sim_error: f64,
    pub orbital_sim_error: f64,
    /// `∫|ỹ|² dt` over the same horizon, for scale.
    pub reference_energy: f64,
    pub status: SimStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundChain {
    /// Linearized orbital simulation error `𝓔⊥`.
    pub linearized_orbital_error: f64,
    /// `∫Ē⊥_Q dt`.
    pub trie_bar_integral: f64,
    /// `∫Ê⊥_Q dt`.
    pub trie_hat_integral: f64,
    /// Both links hold within [`BOUND_CHAIN_SLACK`] of the largest term.
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    pub format: String,
    pub kind: FitKind,
    /// `Σ sᵢ·w` (plus the `ℓ₁` term when regularized).
    pub objective: f64,
    pub costs: CostSummary,
    pub solver: SolverSummary,
    pub program: ProgramStats,
    pub train: Option<SimSummary>,
    pub validation: Option<SimSummary>,
    pub bound_chain: Option<BoundChain>,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
}

impl FitReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Simulate the model over the first `horizon` seconds of `record` (all of
/// it when `None`) and score it against the record.
pub fn evaluate_model(
    spec: &PolyModelSpec,
    coefs: &ModelCoefficients,
    record: &TrajectoryRecord,
    horizon: Option<f64>,
    opts: &SimOptions,
) -> Result<(SimResult, ErrorMetrics, SimSummary)> {
    record.validate()?;
    let rec = match horizon {
        Some(h) => {
            if !(h > 0.0) {
                return Err(Error::InvalidConfig("horizon must be positive".into()));
            }
            let n = ((h / record.dt).round() as usize + 1).min(record.len());
            record.slice(0..n)
        }
        None => record.clone(),
    };
    let sim = simulate(spec, coefs, &rec.x[0], &rec.u, rec.dt, opts);
    let metrics = orbital_sim_error(&sim, &rec)?;
    let energy: Vec<f64> = rec.y.iter().map(|y| y.iter().map(|v| v * v).sum()).collect();
    let inner: f64 = energy[1..energy.len() - 1].iter().sum();
    let summary = SimSummary {
        horizon_s: rec.duration(),
        samples: rec.len(),
        sim_error: metrics.sim_error,
        orbital_sim_error: metrics.orbital_sim_error,
        reference_energy: rec.dt * (inner + 0.5 * (energy[0] + energy[energy.len() - 1])),
        status: sim.status,
    };
    Ok((sim, metrics, summary))
}

/// `𝓔⊥` from the variational run against `∫Ē⊥` and `∫Ê⊥` (dt-weighted).
pub fn bound_chain(
    spec: &PolyModelSpec,
    coefs: &ModelCoefficients,
    metric: &Metric,
    record: &TrajectoryRecord,
    frames: &[TransverseFrame],
) -> Result<BoundChain> {
    let run = variational_run(spec, coefs, record, frames, &metric.q)?;
    let data = sample_data(spec, coefs, record, Some(frames))?;
    let costs = LocalCostBreakdown::compute(&data, metric, record.dt);
    let a = run.lin_orbital_error;
    let b = costs.total(CostKind::Trie, Weighting::Dt);
    let c = costs.total(CostKind::TrieHat, Weighting::Dt);
    let slack = BOUND_CHAIN_SLACK * a.abs().max(b.abs()).max(c.abs()).max(1e-12);
    Ok(BoundChain {
        linearized_orbital_error: a,
        trie_bar_integral: b,
        trie_hat_integral: c,
        holds: a <= b + slack && b <= c + slack,
    })
}

/// Assemble the report of a fit on `train`, optionally scored on held-out
/// `validation` data.
pub fn fit_report(
    spec: &PolyModelSpec,
    outcome: &FitOutcome,
    kind: FitKind,
    train: &TrajectoryRecord,
    validation: Option<&TrajectoryRecord>,
    sim_opts: &SimOptions,
) -> Result<FitReport> {
    let data = sample_data(spec, &outcome.coefs, train, Some(&outcome.frames))?;
    let costs = LocalCostBreakdown::compute(&data, &outcome.metric, train.dt);
    let sol = &outcome.solution;
    let train_summary = evaluate_model(spec, &outcome.coefs, train, None, sim_opts).ok().map(|r| r.2);
    let validation_summary = match validation {
        Some(v) => evaluate_model(spec, &outcome.coefs, v, None, sim_opts).ok().map(|r| r.2),
        None => None,
    };
    let chain = if kind == FitKind::Eq {
        None
    } else {
        let frames = if kind == FitKind::Trie {
            outcome.frames.clone()
        } else {
            crate::geometry::frames_along(train, None)?
        };
        bound_chain(spec, &outcome.coefs, &outcome.metric, train, &frames).ok()
    };
    Ok(FitReport {
        format: REPORT_FORMAT.to_string(),
        kind,
        objective: sol.objective,
        costs: costs.summary(),
        solver: SolverSummary {
            status: sol.status,
            backend: sol.backend.clone(),
            detail: sol.detail.clone(),
            iterations: sol.iterations,
            solve_time_s: sol.solve_time_s,
            worst_block_violation: sol.worst_block_violation,
            max_equality_residual: sol.max_equality_residual,
        },
        program: outcome.stats.clone(),
        train: train_summary,
        validation: validation_summary,
        bound_chain: chain,
        config_hash: None,
        seed: None,
    })
}
