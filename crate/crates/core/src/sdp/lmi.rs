use nalgebra::DMatrix;

use crate::geometry::TransverseFrame;
use crate::linalg::vech_index;
use crate::model::{block_matrix, AffineMatrix, SampleAffine};

/// The symmetric `n × n` matrix `P` whose lower triangle (column-stacked) is
/// stored at `offset..offset + n(n+1)/2`.
pub fn metric_variable(n: usize, offset: usize) -> AffineMatrix {
    let mut p = AffineMatrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let mut unit = DMatrix::zeros(n, n);
            unit[(i, j)] = 1.0;
            unit[(j, i)] = 1.0;
            p.add_term(offset + vech_index(n, i, j), &unit, 1.0);
        }
    }
    p
}

/// Deliberate corruption of the slack LMI, used to check that the oracle
/// gate detects sign errors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LmiMutation {
    #[default]
    None,
    /// Flip the sign of the `ε_x` term inside `Δ_e⁻`.
    FlipMinusResidual,
}

/// Slack LMI encoding `s ≥ sup_Δ Ê(Δ)` for one sample:
///
/// ```text
/// [ s    −tᵀ   c₊ᵀ   dᵀ ]
/// [ −t   −M    C₊ᵀ   Dᵀ ]
/// [ c₊   C₊    P     0  ]  ⪰ 0
/// [ d    D     0     I  ]
/// ```
///
/// with `C₊ = A₊/√2`, `c₊ = ε_x/√2`, `D = GΠ^r`, `d = ε_y`,
/// `t = ½Π^rᵀε_x` and `M = ½Π^rᵀPΠ^r − sym(Π^rᵀA₋)`. The Schur complement
/// with respect to the `diag(P, I)` corner is `s − c − 2hᵀΔ − ΔᵀHΔ ≥ 0` for
/// all `Δ`, i.e. exactly `s ≥ sup_quadratic(H, h, c)` of the relaxed form.
/// A full-space frame (`Π^r = I`, `Π̇ = 0`) gives the relaxed full-space
/// block used on degenerate samples and by the RIE fitter.
pub fn build_trie_lmi(
    sample: &SampleAffine,
    frame: &TransverseFrame,
    metric: &AffineMatrix,
    slack: usize,
    mutation: LmiMutation,
) -> AffineMatrix {
    let n = sample.e.nrows();
    let p_out = sample.g.nrows();
    let pr = &frame.pi_r;
    let id = DMatrix::<f64>::identity(n, n);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;

    let a_plus = sample.e.right_mul(&(&id + &frame.pi_dot)).add(&sample.f).right_mul(pr);
    let a_minus = sample.e.right_mul(&(&id - &frame.pi_dot)).sub(&sample.f).right_mul(pr);
    let prt = pr.transpose();
    let m = metric
        .left_mul(&prt)
        .right_mul(pr)
        .scale(0.5)
        .sub(&a_minus.left_mul(&prt).sym());
    let t_sign = match mutation {
        LmiMutation::None => 1.0,
        LmiMutation::FlipMinusResidual => -1.0,
    };
    let t = sample.eps_x.left_mul(&prt).scale(0.5 * t_sign);
    let c_plus = a_plus.scale(inv_sqrt2);
    let cp = sample.eps_x.scale(inv_sqrt2);
    let d = sample.g.right_mul(pr);
    let dc = sample.eps_y.clone();

    let s = AffineMatrix::variable(slack);
    let z = |a: usize, b: usize| AffineMatrix::zeros(a, b);
    block_matrix(&[
        vec![s, t.transpose().scale(-1.0), cp.transpose(), dc.transpose()],
        vec![t.scale(-1.0), m.scale(-1.0), c_plus.transpose(), d.transpose()],
        vec![cp, c_plus, metric.clone(), z(n, p_out)],
        vec![dc, d, z(p_out, n), AffineMatrix::constant(DMatrix::identity(p_out, p_out))],
    ])
    .sym()
}

/// Equation-error epigraph `s ≥ |ε_x|² + |ε_y|²` as `[s εᵀ; ε I] ⪰ 0`.
pub fn build_eq_block(sample: &SampleAffine, slack: usize) -> AffineMatrix {
    let n = sample.eps_x.nrows();
    let p = sample.eps_y.nrows();
    let eps = block_matrix(&[vec![sample.eps_x.clone()], vec![sample.eps_y.clone()]]);
    block_matrix(&[
        vec![AffineMatrix::variable(slack), eps.transpose()],
        vec![eps, AffineMatrix::constant(DMatrix::identity(n + p, n + p))],
    ])
}
