//! Tangential/transversal projectors along a trajectory.
//!
//! `π = ẋẋᵀ/|ẋ|²` projects onto the velocity, `Π = I − π` onto its
//! orthogonal complement, and `Π^r` (`n × (n−1)`, orthonormal columns) is a
//! reduced basis of `range(Π)`, so `Π^r Π^rᵀ = Π`.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{householder_complement, procrustes_align};
use crate::trajectory::TrajectoryRecord;

/// Relative factor applied to the median speed when no explicit velocity
/// threshold is supplied.
pub const DEFAULT_THRESHOLD_FACTOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct TransverseFrame {
    pub pi: DMatrix<f64>,
    pub big_pi: DMatrix<f64>,
    /// `n × (n−1)`; `n × n` identity on degenerate samples.
    pub pi_r: DMatrix<f64>,
    pub pi_dot: DMatrix<f64>,
    /// Speed below threshold: the sample falls back to the full-space form.
    pub degenerate: bool,
}

impl TransverseFrame {
    pub fn dim(&self) -> usize {
        self.pi.nrows()
    }

    /// Frame used where no transversal exists (and by the RIE fitter):
    /// `π = 0`, `Π = I`, `Π^r = I`, `Π̇ = 0`.
    pub fn full_space(n: usize) -> Self {
        TransverseFrame {
            pi: DMatrix::zeros(n, n),
            big_pi: DMatrix::identity(n, n),
            pi_r: DMatrix::identity(n, n),
            pi_dot: DMatrix::zeros(n, n),
            degenerate: true,
        }
    }
}

/// Projectors at one sample from the velocity `ẋ` and acceleration `ẍ`.
pub fn frame_at(xdot: &[f64], xddot: &[f64], v_threshold: f64) -> Result<TransverseFrame> {
    let n = xdot.len();
    if n < 2 {
        return Err(Error::shape("transverse frames need n >= 2"));
    }
    if xddot.len() != n {
        return Err(Error::shape(format!("xddot has length {}, expected {n}", xddot.len())));
    }
    if xdot.iter().chain(xddot).any(|v| !v.is_finite()) || !v_threshold.is_finite() {
        return Err(Error::InvalidData("non-finite velocity or acceleration".into()));
    }
    let v = DVector::from_column_slice(xdot);
    let a = DVector::from_column_slice(xddot);
    let speed2 = v.norm_squared();
    if speed2.sqrt() < v_threshold || speed2 == 0.0 {
        return Ok(TransverseFrame::full_space(n));
    }
    let pi = (&v * v.transpose()) / speed2;
    let big_pi = DMatrix::identity(n, n) - &pi;
    let pi_rate = (&a * v.transpose() + &v * a.transpose()) / speed2
        - (&v * v.transpose()) * (2.0 * v.dot(&a) / (speed2 * speed2));
    Ok(TransverseFrame {
        pi,
        big_pi,
        pi_r: householder_complement(&v),
        pi_dot: -pi_rate,
        degenerate: false,
    })
}

/// Median speed times [`DEFAULT_THRESHOLD_FACTOR`].
pub fn default_threshold(record: &TrajectoryRecord) -> f64 {
    let mut speeds: Vec<f64> = record
        .xdot
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    speeds.sort_by(|a, b| a.total_cmp(b));
    let med = if speeds.is_empty() { 0.0 } else { speeds[speeds.len() / 2] };
    DEFAULT_THRESHOLD_FACTOR * med
}

/// Frames at every sample, with each `Π^r` rotated (orthogonal Procrustes)
/// to be as close as possible to the previous non-degenerate sample's.
pub fn frames_along(record: &TrajectoryRecord, v_threshold: Option<f64>) -> Result<Vec<TransverseFrame>> {
    record.validate()?;
    let thr = v_threshold.unwrap_or_else(|| default_threshold(record));
    let mut frames = Vec::with_capacity(record.len());
    let mut prev: Option<DMatrix<f64>> = None;
    for i in 0..record.len() {
        let mut fr = frame_at(&record.xdot[i], &record.xddot[i], thr)?;
        if !fr.degenerate {
            if let Some(p) = &prev {
                fr.pi_r = procrustes_align(&fr.pi_r, p);
            }
            prev = Some(fr.pi_r.clone());
        }
        frames.push(fr);
    }
    Ok(frames)
}

/// Debug dump: `i,degenerate,pi_r(row-major)...,pi_dot(row-major)...`.
pub fn write_frames_csv(path: &Path, frames: &[TransverseFrame]) -> Result<()> {
    let mut out = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        let mut line = format!("{i},{}", f.degenerate as u8);
        for m in [&f.pi_r, &f.pi_dot] {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    line.push_str(&format!(",{:?}", m[(r, c)]));
                }
            }
        }
        writeln!(out, "{line}").expect("write to vec");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
