use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::assemble::{assemble, AssembleOptions, FitKind};
use super::backend::{solve, ClarabelBackend, ConicBackend, ConicSolution, SolverOptions};
use crate::error::Result;
use crate::geometry::{frames_along, TransverseFrame};
use crate::linalg::unvech;
use crate::model::{ModelCoefficients, PolyModelSpec};
use crate::objective::Metric;
use crate::trajectory::TrajectoryRecord;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    #[serde(flatten)]
    pub program: AssembleOptions,
    /// Speed below which a sample is treated as degenerate; defaults to a
    /// small fraction of the median speed.
    pub v_threshold: Option<f64>,
    pub solver: SolverOptions,
}

impl FitOptions {
    pub fn new(kind: FitKind) -> Self {
        let mut o = FitOptions::default();
        o.program.kind = kind;
        o
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProgramStats {
    pub variables: usize,
    pub blocks: usize,
    pub equalities: usize,
    pub largest_block: usize,
    pub assemble_time_s: f64,
}

/// Result of one identification run. Coefficients and metric are extracted
/// whatever the solver status; check `solution.status` before trusting them.
#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub coefs: ModelCoefficients,
    /// Fitted storage metric (`Q = P⁻¹`); identity for `eq` fits or when the
    /// returned `P` is not positive definite.
    pub metric: Metric,
    pub solution: ConicSolution,
    pub frames: Vec<TransverseFrame>,
    pub stats: ProgramStats,
}

pub fn fit(record: &TrajectoryRecord, spec: &PolyModelSpec, opts: &FitOptions) -> Result<FitOutcome> {
    fit_with_backend(record, spec, opts, &ClarabelBackend)
}

pub fn fit_with_backend(
    record: &TrajectoryRecord,
    spec: &PolyModelSpec,
    opts: &FitOptions,
    backend: &dyn ConicBackend,
) -> Result<FitOutcome> {
    let frames = match opts.program.kind {
        FitKind::Trie => frames_along(record, opts.v_threshold)?,
        _ => vec![TransverseFrame::full_space(spec.n); record.len()],
    };
    let start = Instant::now();
    let prog = assemble(record, Some(&frames), spec, &opts.program)?;
    let stats = ProgramStats {
        variables: prog.n_vars,
        blocks: prog.blocks.len(),
        equalities: prog.equalities.len(),
        largest_block: prog.blocks.iter().map(|b| b.dim()).max().unwrap_or(0),
        assemble_time_s: start.elapsed().as_secs_f64(),
    };
    let solution = solve(&prog, backend, &opts.solver)?;
    let coefs = ModelCoefficients::from_vector(spec, &solution.x[prog.layout.coefficients.clone()])?;
    let metric = if prog.layout.metric.is_empty() {
        Metric::identity(spec.n)
    } else {
        let p = unvech(spec.n, &solution.x[prog.layout.metric.clone()]);
        Metric::from_p(p).unwrap_or_else(|_| Metric::identity(spec.n))
    };
    Ok(FitOutcome {
        coefs,
        metric,
        solution,
        frames,
        stats,
    })
}
