use nalgebra::{DMatrix, DVector};

use super::LaguerreBank;
use crate::error::{Error, Result};

/// State-space matrices `(A, B)` of the Laguerre ladder: a first-order
/// low-pass `a/(s + a)` followed by all-pass sections `(a − s)/(s + a)`.
/// Every filter has unit DC gain.
///
/// `ż₁ = −a z₁ + a v`, `żᵢ = −a zᵢ + 2a z_{i−1} − 2a z_{i−2} + … ± a v`.
pub fn laguerre_matrices(bank: &LaguerreBank) -> (DMatrix<f64>, DVector<f64>) {
    let (a, k) = (bank.pole, bank.order);
    let am = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            -a
        } else if j < i {
            let sign = if (i - j) % 2 == 1 { 1.0 } else { -1.0 };
            2.0 * a * sign
        } else {
            0.0
        }
    });
    let b = DVector::from_fn(k, |i, _| if i % 2 == 0 { a } else { -a });
    (am, b)
}

/// Laguerre filter states and their analytic rates, one channel per filter.
#[derive(Clone, Debug, PartialEq)]
pub struct LaguerreOutput {
    pub states: Vec<Vec<f64>>,
    pub rates: Vec<Vec<f64>>,
}

/// Run the bank over `channel` from a zero initial state.
///
/// The input is treated as piecewise linear between samples (first-order
/// hold) and the LTI system is discretized exactly with one matrix
/// exponential. Rates come from `ż = A z + B v` at each sample.
pub fn laguerre_states(channel: &[f64], dt: f64, bank: &LaguerreBank) -> Result<LaguerreOutput> {
    bank.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidData(format!("dt must be positive, got {dt}")));
    }
    let k = bank.order;
    let (a, b) = laguerre_matrices(bank);
    // [ż; v̇; ẇ] = [[A, B, 0], [0, 0, 1], [0, 0, 0]] [z; v; w]
    let mut aug = DMatrix::zeros(k + 2, k + 2);
    aug.view_mut((0, 0), (k, k)).copy_from(&a);
    aug.view_mut((0, k), (k, 1)).copy_from(&b);
    aug[(k, k + 1)] = 1.0;
    let phi_aug = (aug * dt).exp();
    let phi = phi_aug.view((0, 0), (k, k)).into_owned();
    let gamma_v = phi_aug.view((0, k), (k, 1)).into_owned();
    let gamma_w = phi_aug.view((0, k + 1), (k, 1)).into_owned();

    let n = channel.len();
    let mut states = vec![vec![0.0; n]; k];
    let mut rates = vec![vec![0.0; n]; k];
    let mut z = DVector::zeros(k);
    for i in 0..n {
        let zd = &a * &z + &b * channel[i];
        for j in 0..k {
            states[j][i] = z[j];
            rates[j][i] = zd[j];
        }
        if i + 1 < n {
            let slope = (channel[i + 1] - channel[i]) / dt;
            z = &phi * &z + &gamma_v * channel[i] + &gamma_w * slope;
        }
    }
    Ok(LaguerreOutput { states, rates })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input_zero_states() {
        let out = laguerre_states(&[0.0; 50], 0.01, &LaguerreBank::new(3.0, 3).unwrap()).unwrap();
        assert!(out.states.iter().flatten().all(|v| *v == 0.0));
        assert!(out.rates.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn first_order_step_response() {
        let dt = 0.01;
        let out = laguerre_states(&vec![1.0; 1001], dt, &LaguerreBank::new(2.0, 1).unwrap()).unwrap();
        let z1 = out.states[0][100];
        assert!((z1 - (1.0 - (-2.0f64).exp())).abs() < 1e-9, "{z1}");
        assert!((out.states[0][1000] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rates_match_central_difference() {
        let dt = 0.01;
        let v: Vec<f64> = (0..600).map(|i| (1.3 * i as f64 * dt).sin()).collect();
        let out = laguerre_states(&v, dt, &LaguerreBank::new(1.5, 3).unwrap()).unwrap();
        for j in 0..3 {
            let z = &out.states[j];
            let err = (1..599)
                .map(|i| ((z[i + 1] - z[i - 1]) / (2.0 * dt) - out.rates[j][i]).abs())
                .fold(0.0, f64::max);
            assert!(err < 5.0 * dt * dt, "filter {j}: {err}");
        }
    }

    #[test]
    fn all_filters_have_unit_dc_gain() {
        let out = laguerre_states(&vec![2.5; 4000], 0.01, &LaguerreBank::new(2.0, 3).unwrap()).unwrap();
        for j in 0..3 {
            assert!((out.states[j][3999] - 2.5).abs() < 1e-6);
            assert!(out.rates[j][3999].abs() < 1e-6);
        }
    }
}
