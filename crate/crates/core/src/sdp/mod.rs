//! The convex identification program: per-sample slack LMIs, the
//! sum-of-squares well-posedness certificate and the metric floor, assembled
//! into a block SDP and handed to a pluggable conic backend.

mod assemble;
mod backend;
mod fit;
mod lmi;
mod program;
mod sos;

pub use assemble::{assemble, AssembleOptions, FitKind};
pub use backend::{solve, BackendResult, ClarabelBackend, ConicBackend, ConicSolution, SolveStatus, SolverOptions};
pub use fit::{fit, fit_with_backend, FitOptions, FitOutcome, ProgramStats};
pub use lmi::{build_eq_block, build_trie_lmi, metric_variable, LmiMutation};
pub use program::{svec, svec_positions, ConicProgram, LinearEquality, PsdBlock, StandardForm, SvecOrder, VariableLayout};
pub use sos::{build_sos_block, SosCertificate};
