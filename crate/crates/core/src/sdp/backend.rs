use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use serde::{Deserialize, Serialize};

use super::program::{ConicProgram, SvecOrder};
use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iter: u32,
    /// Backend gap/feasibility tolerance.
    pub tol: f64,
    /// A-posteriori tolerance on block eigenvalues and equality residuals,
    /// relative to the entry scale.
    pub feas_tol: f64,
    pub time_limit_s: f64,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 200,
            tol: 1e-8,
            feas_tol: 1e-6,
            time_limit_s: f64::INFINITY,
            verbose: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalLimit,
}

/// What a backend reports before independent verification.
#[derive(Clone, Debug)]
pub struct BackendResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub iterations: u32,
    pub detail: String,
}

/// A solver that consumes the block-affine program directly.
pub trait ConicBackend {
    fn name(&self) -> &'static str;
    fn solve(&self, program: &ConicProgram, opts: &SolverOptions) -> Result<BackendResult>;
}

/// Interior-point backend on the Clarabel conic solver. `1 × 1` blocks
/// become nonnegative-orthant rows, larger blocks PSD triangle cones.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClarabelBackend;

impl ConicBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        "clarabel"
    }

    fn solve(&self, program: &ConicProgram, opts: &SolverOptions) -> Result<BackendResult> {
        let sf = program.to_standard_form(SvecOrder::UpperColumns);
        let m = sf.b.len();
        let (mut ri, mut ci, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        for &(r, c, v) in &sf.a {
            ri.push(r);
            ci.push(c);
            vals.push(v);
        }
        let a = CscMatrix::new_from_triplets(m, sf.n_vars, ri, ci, vals);
        let p = CscMatrix::zeros((sf.n_vars, sf.n_vars));
        let mut cones = Vec::with_capacity(sf.block_dims.len() + 1);
        if sf.n_eq > 0 {
            cones.push(SupportedConeT::ZeroConeT(sf.n_eq));
        }
        for &d in &sf.block_dims {
            cones.push(if d == 1 {
                SupportedConeT::NonnegativeConeT(1)
            } else {
                SupportedConeT::PSDTriangleConeT(d)
            });
        }
        let settings = DefaultSettingsBuilder::default()
            .verbose(opts.verbose)
            .max_iter(opts.max_iter)
            .time_limit(opts.time_limit_s)
            .tol_gap_abs(opts.tol)
            .tol_gap_rel(opts.tol)
            .tol_feas(opts.tol)
            .build()
            .map_err(|e| Error::Solver(format!("solver settings: {e}")))?;
        let mut solver = DefaultSolver::new(&p, &sf.c, &a, &sf.b, &cones, settings)
            .map_err(|e| Error::Solver(format!("solver setup: {e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
            _ => SolveStatus::NumericalLimit,
        };
        Ok(BackendResult {
            status,
            x: sol.x.clone(),
            iterations: sol.iterations,
            detail: format!("{:?}", sol.status),
        })
    }
}

/// Solver outcome after independent feasibility checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConicSolution {
    pub status: SolveStatus,
    #[serde(skip)]
    pub x: Vec<f64>,
    pub objective: f64,
    #[serde(skip)]
    pub block_min_eigs: Vec<f64>,
    pub worst_block_violation: f64,
    pub max_equality_residual: f64,
    pub iterations: u32,
    pub solve_time_s: f64,
    pub backend: String,
    pub detail: String,
}

/// Solve and re-verify. An optimal report from the backend is downgraded to
/// `numerical_limit` when some block's minimum eigenvalue is below
/// `−feas_tol·max(1, max|entry|)` or an equality residual exceeds
/// `feas_tol·max(1, |rhs|)`.
pub fn solve(program: &ConicProgram, backend: &dyn ConicBackend, opts: &SolverOptions) -> Result<ConicSolution> {
    program.validate()?;
    let start = Instant::now();
    let raw = backend.solve(program, opts)?;
    let solve_time_s = start.elapsed().as_secs_f64();
    let mut status = raw.status;
    let mut detail = raw.detail;
    let x = raw.x;
    if x.len() != program.n_vars {
        return Err(Error::Solver(format!("backend returned {} values for {} variables", x.len(), program.n_vars)));
    }
    let mut block_min_eigs = Vec::with_capacity(program.blocks.len());
    let mut worst = 0.0f64;
    let mut worst_label = String::new();
    for b in &program.blocks {
        let m = b.map.eval(&x);
        let ev = min_eigenvalue(&m);
        let scale = m.abs().max().max(1.0);
        let v = -ev / scale;
        if v > worst {
            worst = v;
            worst_label = b.label.clone();
        }
        block_min_eigs.push(ev);
    }
    let mut max_res = 0.0f64;
    for eq in &program.equalities {
        let r = eq.residual(&x).abs() / eq.rhs.abs().max(1.0);
        max_res = max_res.max(r);
    }
    if status == SolveStatus::Optimal && (worst > opts.feas_tol || max_res > opts.feas_tol || x.iter().any(|v| !v.is_finite())) {
        status = SolveStatus::NumericalLimit;
        detail = format!(
            "{detail}; a-posteriori check failed (block {worst_label} violation {worst:.3e}, equality residual {max_res:.3e})"
        );
    }
    Ok(ConicSolution {
        status,
        objective: program.objective_value(&x),
        x,
        block_min_eigs,
        worst_block_violation: worst,
        max_equality_residual: max_res,
        iterations: raw.iterations,
        solve_time_s,
        backend: backend.name().to_string(),
        detail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AffineMatrix;
    use crate::sdp::program::{LinearEquality, PsdBlock};
    use nalgebra::DMatrix;

    #[test]
    fn scalar_slack_program() {
        let mut p = ConicProgram::new(1);
        p.objective = vec![1.0];
        p.blocks.push(PsdBlock::new("s", AffineMatrix::variable(0)));
        let sol = solve(&p, &ClarabelBackend, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.x[0].abs() < 1e-7);
    }

    /// `min x₀ + x₂` over `[[x₀, 1], [1, x₂]] ⪰ 0`: optimum `x₀ = x₂ = 1`.
    #[test]
    fn two_by_two_completion() {
        let mut p = ConicProgram::new(2);
        p.objective = vec![1.0, 1.0];
        let mut m = AffineMatrix::constant(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        m.add_term(0, &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), 1.0);
        m.add_term(1, &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]), 1.0);
        p.blocks.push(PsdBlock::new("m", m));
        let sol = solve(&p, &ClarabelBackend, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 2.0).abs() < 1e-6);
        assert!((sol.x[0] - 1.0).abs() < 1e-5 && (sol.x[1] - 1.0).abs() < 1e-5);
    }

    /// `X ⪰ I` and `−X ⪰ I` cannot both hold.
    #[test]
    fn infeasible_pair() {
        let mut p = ConicProgram::new(1);
        let mut a = AffineMatrix::constant(DMatrix::from_element(1, 1, -1.0));
        a.add_term(0, &DMatrix::from_element(1, 1, 1.0), 1.0);
        let mut b = AffineMatrix::constant(DMatrix::from_element(1, 1, -1.0));
        b.add_term(0, &DMatrix::from_element(1, 1, -1.0), 1.0);
        p.blocks.push(PsdBlock::new("a", a));
        p.blocks.push(PsdBlock::new("b", b));
        let sol = solve(&p, &ClarabelBackend, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn equality_pins_are_respected() {
        let mut p = ConicProgram::new(2);
        p.objective = vec![1.0, 1.0];
        p.blocks.push(PsdBlock::new("x0", AffineMatrix::variable(0)));
        p.blocks.push(PsdBlock::new("x1", AffineMatrix::variable(1)));
        p.equalities.push(LinearEquality::pin(1, 3.0));
        let sol = solve(&p, &ClarabelBackend, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.x[1] - 3.0).abs() < 1e-7 && sol.x[0].abs() < 1e-7);
    }
}
