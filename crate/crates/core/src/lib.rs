//! Identification of implicit polynomial state-space models
//! `d/dt e(x) = f(x, u)`, `y = g(x, u)` from sampled trajectories, with
//! fits that are allowed to have stable limit cycles.
//!
//! The pipeline is:
//!
//! 1. [`trajectory`]: load or synthesize data, smooth and differentiate it,
//!    and augment the measured outputs with Laguerre filter states.
//! 2. [`geometry`]: tangential/transversal projectors along the record.
//! 3. [`objective`]: pointwise equation-error, RIE, transverse RIE and its
//!    convex relaxation, each as a closed-form supremum.
//! 4. [`sdp`]: the per-sample Schur-complement LMIs plus the sum-of-squares
//!    well-posedness certificate, assembled into a block SDP and solved.
//! 5. [`simulate`]: open-loop simulation, (orbital) simulation error and the
//!    linearized variational run used to check the bound chain.

// Links the system OpenBLAS used by clarabel's PSD cone.
use openblas_src as _;

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod objective;
pub mod report;
pub mod sdp;
pub mod simulate;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
