use nalgebra::DMatrix;

use super::SmootherConfig;
use crate::error::{Error, Result};

/// Per-position weights of the local least-squares fit: `value[k]` and
/// `deriv[k]` give the fit value/derivative at window position `pos` from
/// sample `k` of the window (derivative in units of 1/sample).
fn window_weights(window: usize, degree: usize, pos: usize) -> (Vec<f64>, Vec<f64>) {
    let half = (window / 2) as f64;
    // Vandermonde in centered, scaled coordinates for conditioning.
    let a = DMatrix::from_fn(window, degree + 1, |k, j| ((k as f64 - half) / half).powi(j as i32));
    // pinv(A) = (AᵀA)⁻¹Aᵀ; rows of pinv map samples to polynomial coefficients.
    let ata = a.transpose() * &a;
    let pinv = ata
        .cholesky()
        .expect("Vandermonde normal matrix is positive definite")
        .solve(&a.transpose());
    let s = (pos as f64 - half) / half;
    let mut value = vec![0.0; window];
    let mut deriv = vec![0.0; window];
    for k in 0..window {
        let mut v = 0.0;
        let mut d = 0.0;
        for j in 0..=degree {
            v += pinv[(j, k)] * s.powi(j as i32);
            if j > 0 {
                d += pinv[(j, k)] * j as f64 * s.powi(j as i32 - 1) / half;
            }
        }
        value[k] = v;
        deriv[k] = d;
    }
    (value, deriv)
}

/// Smooth a uniformly sampled channel with a centered local polynomial fit
/// and return `(smoothed, derivative)`. Near the ends the window is shifted
/// inside the data and the fit is evaluated off-center, so length is kept.
pub fn smooth_and_differentiate(channel: &[f64], dt: f64, cfg: &SmootherConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let n = channel.len();
    let w = cfg.window;
    if w > n {
        return Err(Error::InvalidData(format!("smoother window {w} larger than series length {n}")));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidData(format!("dt must be positive, got {dt}")));
    }
    let half = w / 2;
    let weights: Vec<(Vec<f64>, Vec<f64>)> = (0..w).map(|pos| window_weights(w, cfg.poly_degree, pos)).collect();
    let mut smooth = vec![0.0; n];
    let mut deriv = vec![0.0; n];
    for i in 0..n {
        let start = i.saturating_sub(half).min(n - w);
        let pos = i - start;
        let (vw, dw) = &weights[pos];
        let seg = &channel[start..start + w];
        smooth[i] = vw.iter().zip(seg).map(|(a, b)| a * b).sum();
        deriv[i] = dw.iter().zip(seg).map(|(a, b)| a * b).sum::<f64>() / dt;
    }
    Ok((smooth, deriv))
}
