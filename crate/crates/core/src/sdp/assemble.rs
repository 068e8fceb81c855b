use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lmi::{build_eq_block, build_trie_lmi, metric_variable, LmiMutation};
use super::program::{ConicProgram, LinearEquality, PsdBlock, VariableLayout};
use super::sos::build_sos_block;
use crate::error::{Error, Result};
use crate::geometry::TransverseFrame;
use crate::linalg::vech_len;
use crate::model::{affine_maps, AffineMatrix, PolyModelSpec};
use crate::objective::Weighting;
use crate::trajectory::TrajectoryRecord;

/// Which identification objective to minimize.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// Equation error `Σ|ε_x|² + |ε_y|²` under well-posedness only.
    Eq,
    /// Full-space relaxed robust identification error.
    Rie,
    /// Transverse relaxed robust identification error.
    #[default]
    Trie,
}

impl std::str::FromStr for FitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq" => Ok(FitKind::Eq),
            "rie" => Ok(FitKind::Rie),
            "trie" => Ok(FitKind::Trie),
            _ => Err(Error::InvalidConfig(format!("unknown fit kind {s:?} (expected eq, rie or trie)"))),
        }
    }
}

impl std::fmt::Display for FitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitKind::Eq => "eq",
            FitKind::Rie => "rie",
            FitKind::Trie => "trie",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssembleOptions {
    pub kind: FitKind,
    /// Weight of the `ℓ₁` penalty on model coefficients.
    pub lambda: f64,
    /// `P ⪰ metric_floor · I`.
    pub metric_floor: f64,
    pub weighting: Weighting,
    /// Well-posedness is imposed as `E + Eᵀ ⪰ (1 + sos_margin)·I`.
    pub sos_margin: f64,
    /// Variables fixed by equality, as `(index, value)`.
    pub pinned: Vec<(usize, f64)>,
    #[serde(skip)]
    pub mutation: LmiMutation,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            kind: FitKind::Trie,
            lambda: 0.0,
            metric_floor: 1e-6,
            weighting: Weighting::Dt,
            sos_margin: 0.0,
            pinned: Vec::new(),
            mutation: LmiMutation::None,
        }
    }
}

/// Build the identification program.
///
/// Variable layout: model coefficients (`e`, `f`, `g`, row-major) ⊕
/// `vech(P)` (lower triangle, column-stacked; empty for `eq`) ⊕ one slack per
/// sample ⊕ `ℓ₁` epigraph variables (one per coefficient, only if
/// `lambda > 0`) ⊕ Gram matrix `vech(W)` of the well-posedness certificate.
///
/// Blocks, in order: one slack block per sample, the certificate, then
/// `P − floor·I ⪰ 0` (not for `eq`), then `[t_k c_k; c_k t_k] ⪰ 0` per
/// coefficient when `lambda > 0`. Coefficients that enter no block are
/// pinned to zero so the program has no free null directions.
pub fn assemble(
    record: &TrajectoryRecord,
    frames: Option<&[TransverseFrame]>,
    spec: &PolyModelSpec,
    opts: &AssembleOptions,
) -> Result<ConicProgram> {
    record.validate()?;
    if !(opts.lambda >= 0.0 && opts.lambda.is_finite()) {
        return Err(Error::InvalidConfig("lambda must be finite and >= 0".into()));
    }
    if !(opts.metric_floor > 0.0) {
        return Err(Error::InvalidConfig("metric floor must be > 0".into()));
    }
    let n = spec.n;
    let ns = record.len();
    if opts.kind == FitKind::Trie {
        match frames {
            Some(f) if f.len() == ns => {}
            Some(f) => return Err(Error::shape(format!("{} frames for {ns} samples", f.len()))),
            None => return Err(Error::InvalidConfig("transverse fit needs frames".into())),
        }
    }
    let maps = affine_maps(spec, record)?;

    let nc = spec.n_coef();
    let with_metric = opts.kind != FitKind::Eq;
    let n_metric = if with_metric { vech_len(n) } else { 0 };
    let slack0 = nc + n_metric;
    let l1_0 = slack0 + ns;
    let n_l1 = if opts.lambda > 0.0 { nc } else { 0 };
    let gram0 = l1_0 + n_l1;
    let cert = build_sos_block(spec, gram0, opts.sos_margin);
    let n_vars = gram0 + cert.n_gram_vars();

    let mut prog = ConicProgram::new(n_vars);
    prog.layout = VariableLayout {
        coefficients: 0..nc,
        metric: nc..nc + n_metric,
        slacks: slack0..slack0 + ns,
        l1: l1_0..l1_0 + n_l1,
        gram: gram0..n_vars,
    };
    let w = match opts.weighting {
        Weighting::Dt => record.dt,
        Weighting::Plain => 1.0,
    };
    for i in 0..ns {
        prog.objective[slack0 + i] = w;
    }
    for k in 0..n_l1 {
        prog.objective[l1_0 + k] = opts.lambda;
    }

    let metric = metric_variable(n, nc);
    let full = TransverseFrame::full_space(n);
    let blocks: Vec<PsdBlock> = maps
        .par_iter()
        .enumerate()
        .map(|(i, sa)| {
            let slack = slack0 + i;
            let map = match opts.kind {
                FitKind::Eq => build_eq_block(sa, slack),
                FitKind::Rie => build_trie_lmi(sa, &full, &metric, slack, opts.mutation),
                FitKind::Trie => {
                    let fr = &frames.expect("checked above")[i];
                    let fr = if fr.degenerate { &full } else { fr };
                    build_trie_lmi(sa, fr, &metric, slack, opts.mutation)
                }
            };
            PsdBlock::new(format!("sample{i}"), map)
        })
        .collect();
    prog.blocks = blocks;
    prog.blocks.push(PsdBlock::new("well_posedness", cert.block));
    prog.equalities.extend(cert.equalities);
    if with_metric {
        let floor = DMatrix::<f64>::identity(n, n) * opts.metric_floor;
        prog.blocks.push(PsdBlock::new("metric", metric.add_constant(&-floor)));
    }

    let used = prog.used_variables();
    for v in 0..nc {
        if !used[v] && !opts.pinned.iter().any(|(p, _)| *p == v) {
            prog.equalities.push(LinearEquality::pin(v, 0.0));
        }
    }
    for &(v, val) in &opts.pinned {
        if v >= n_vars {
            return Err(Error::shape(format!("pinned variable {v} out of range")));
        }
        prog.equalities.push(LinearEquality::pin(v, val));
    }
    for k in 0..n_l1 {
        let mut m = AffineMatrix::zeros(2, 2);
        m.add_term(k, &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), 1.0);
        m.add_term(l1_0 + k, &DMatrix::identity(2, 2), 1.0);
        prog.blocks.push(PsdBlock::new(format!("l1_{k}"), m));
    }
    Ok(prog)
}
