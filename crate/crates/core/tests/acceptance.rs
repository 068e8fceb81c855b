//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Arguments filter by criterion number (`cargo test --test acceptance -- 4 6`).

use std::time::Instant;

use trie_core::geometry::frames_along;
use trie_core::linalg::min_eigenvalue;
use trie_core::model::{jacobian_e, sample_data, ModelCoefficients, PolyModelSpec};
use trie_core::objective::{rie_local, CostKind, LocalCostBreakdown, Weighting};
use trie_core::report::{bound_chain, evaluate_model};
use trie_core::sdp::{fit, FitKind, FitOptions, FitOutcome, SolveStatus};
use trie_core::simulate::{simulate_record, SimOptions, SimStatus};
use trie_core::trajectory::{build_state, gen_synthetic, LaguerreBank, SmootherConfig, SyntheticRun, SyntheticSystem, TrajectoryRecord};
use trie_core::verify::{
    dissipation_residuals, deviation_oracle_check, lmi_oracle_check, projector_check, relaxation_identities_check, relaxation_bound_check,
    CheckResult, VerifyOptions,
};

/// Criteria reported but not fatal to the run.
const OPEN: &[u32] = &[6];

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_check(c: CheckResult, budget_s: f64) -> Outcome {
    Outcome {
        passed: c.passed && c.elapsed_s < budget_s,
        detail: format!("{} [metric {:e}, {:.2} s of {budget_s} s]", c.detail, c.metric, c.elapsed_s),
    }
}

fn vdp_truth(duration: f64, dt: f64) -> TrajectoryRecord {
    gen_synthetic(&SyntheticRun::new(SyntheticSystem::VanDerPol { mu: 1.0 }, duration, dt)).unwrap().1
}

/// Smallest eigenvalue of `E + Eᵀ` over a `20ⁿ` grid on the bounding box of
/// `rec.x` widened by 25%.
fn grid_min_eig(spec: &PolyModelSpec, coefs: &ModelCoefficients, rec: &TrajectoryRecord) -> f64 {
    let n = rec.n();
    let (lo, hi): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|j| {
            let (a, b) = rec.x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x[j]), b.max(x[j])));
            let pad = 0.125 * (b - a);
            (a - pad, b + pad)
        })
        .unzip();
    let k = 20usize;
    let mut worst = f64::INFINITY;
    for idx in 0..k.pow(n as u32) {
        let mut r = idx;
        let x: Vec<f64> = (0..n)
            .map(|j| {
                let i = r % k;
                r /= k;
                lo[j] + (hi[j] - lo[j]) * i as f64 / (k - 1) as f64
            })
            .collect();
        let e = jacobian_e(spec, coefs, &x).unwrap();
        worst = worst.min(min_eigenvalue(&(&e + e.transpose())));
    }
    worst
}

fn criterion4(models: &mut Vec<(String, PolyModelSpec, ModelCoefficients, TrajectoryRecord)>) -> Outcome {
    let rec = vdp_truth(30.0, 0.01);
    let spec = PolyModelSpec::dense(2, 1, 1, 3, 3, 1, 1).unwrap();
    let out = fit(&rec, &spec, &FitOptions::new(FitKind::Trie)).unwrap();
    if out.solution.status != SolveStatus::Optimal {
        return Outcome {
            passed: false,
            detail: format!("fit ended {:?}", out.solution.status),
        };
    }
    models.push(("bound-chain trie".into(), spec.clone(), out.coefs.clone(), rec.clone()));
    let chain = bound_chain(&spec, &out.coefs, &out.metric, &rec, &out.frames).unwrap();
    let diss = dissipation_residuals(&spec, &out.coefs, &out.metric, &rec, &out.frames, 1e-4).unwrap();
    let scale = 1.0 + chain.trie_hat_integral.abs();
    let gap1 = chain.trie_bar_integral - chain.linearized_orbital_error;
    let gap2 = chain.trie_hat_integral - chain.trie_bar_integral;
    let passed = gap1 >= -1e-4 * scale && gap2 >= -1e-4 * scale && diss.fraction_ok >= 0.99;
    Outcome {
        passed,
        detail: format!(
            "𝓔⊥ {:.4e}, ∫Ē⊥ {:.4e}, ∫Ê⊥ {:.4e}; gaps {gap1:.3e}, {gap2:.3e} (≥ {:.1e}); pointwise storage inequality at {:.1}% of {} samples (need 99%)",
            chain.linearized_orbital_error,
            chain.trie_bar_integral,
            chain.trie_hat_integral,
            -1e-4 * scale,
            100.0 * diss.fraction_ok,
            diss.checked
        ),
    }
}

fn peak_to_peak(ys: &[Vec<f64>]) -> f64 {
    let (a, b) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y[0]), b.max(y[0])));
    b - a
}

fn criterion6(models: &mut Vec<(String, PolyModelSpec, ModelCoefficients, TrajectoryRecord)>) -> Outcome {
    let t_train = 30.0;
    let dt = 0.01;
    let mut run = SyntheticRun::new(SyntheticSystem::VanDerPol { mu: 1.0 }, 3.0 * t_train, dt);
    run.noise_std = 0.02;
    run.seed = 6;
    let (raw, _) = gen_synthetic(&run).unwrap();
    let rec = build_state(&raw, &LaguerreBank::new(1.0, 2).unwrap(), &SmootherConfig::new(21, 3).unwrap()).unwrap();
    let n_train = (t_train / dt).round() as usize + 1;
    let train = rec.slice(0..n_train);
    let spec = PolyModelSpec::dense(rec.n(), rec.m(), rec.p(), 1, 3, 1, 1).unwrap();
    let opts = SimOptions::default();
    let period = (7.0 / dt) as usize;

    let mut lines = Vec::new();
    let mut fits: Vec<(FitKind, FitOutcome)> = Vec::new();
    for kind in [FitKind::Eq, FitKind::Rie, FitKind::Trie] {
        let out = fit(&train, &spec, &FitOptions::new(kind)).unwrap();
        if out.solution.status != SolveStatus::Optimal {
            return Outcome {
                passed: false,
                detail: format!("{kind} fit ended {:?}", out.solution.status),
            };
        }
        models.push((format!("comparison {kind}"), spec.clone(), out.coefs.clone(), rec.clone()));
        fits.push((kind, out));
    }
    let reference_pp = peak_to_peak(&rec.y[rec.len() - period..]);
    let mut eval = |kind: FitKind, out: &FitOutcome| {
        let (sim, _, s) = evaluate_model(&spec, &out.coefs, &rec, None, &opts).unwrap();
        let done = s.status == SimStatus::Completed;
        let (first, last) = if done {
            (peak_to_peak(&sim.outputs[..period]), peak_to_peak(&sim.outputs[sim.outputs.len() - period..]))
        } else {
            (f64::NAN, f64::NAN)
        };
        lines.push(format!(
            "{kind}: 𝔈 {:.3e}, 𝔈⊥ {:.3e}, {:?}, amplitude {first:.3} → {last:.3}",
            s.sim_error, s.orbital_sim_error, s.status
        ));
        (s, first, last)
    };
    let (eq, _, _) = eval(FitKind::Eq, &fits[0].1);
    let (rie, rie_first, rie_last) = eval(FitKind::Rie, &fits[1].1);
    let (trie, _, trie_last) = eval(FitKind::Trie, &fits[2].1);
    let _ = rie;

    let a = trie.status == SimStatus::Completed
        && trie_last >= 0.5 * reference_pp
        && trie.orbital_sim_error <= 0.25 * trie.reference_energy;
    let b = eq.status != SimStatus::Completed || eq.sim_error >= 2.0 * trie.sim_error;
    let rie_out = &fits[1].1;
    let data = sample_data(&spec, &rie_out.coefs, &train, None).unwrap();
    let infinite = data.iter().filter(|s| rie_local(s, &rie_out.metric).is_infinite()).count();
    let inf_share = infinite as f64 / data.len() as f64;
    let c = inf_share >= 0.01 || rie_last <= 0.5 * rie_first;
    lines.push(format!(
        "reference amplitude {reference_pp:.3}, energy {:.3e}; rie +∞ share {:.1}%; (a) {a} (b) {b} (c) {c}",
        trie.reference_energy,
        100.0 * inf_share
    ));
    Outcome {
        passed: a && b && c,
        detail: lines.join("; "),
    }
}

fn criterion8(models: &[(String, PolyModelSpec, ModelCoefficients, TrajectoryRecord)]) -> Outcome {
    if models.is_empty() {
        return Outcome {
            passed: false,
            detail: "no fitted models (run with criteria 4, 6 or 9)".into(),
        };
    }
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, spec, coefs, rec) in models {
        let m = grid_min_eig(spec, coefs, rec);
        passed &= m >= 1.0 - 1e-6;
        parts.push(format!("{name} {m:.9}"));
    }
    Outcome {
        passed,
        detail: format!("min eig(E + Eᵀ) on 20ⁿ grids: {}", parts.join(", ")),
    }
}

/// Hopf normal form `ẋ = a(1 − |x|²)x + ωJx` with `e(x) = x`, `y = x₁`:
/// a stable unit circle inside the dense degree-3 class.
fn hopf_generator(a: f64, omega: f64) -> (PolyModelSpec, ModelCoefficients) {
    let spec = PolyModelSpec::dense(2, 0, 1, 1, 3, 0, 1).unwrap();
    let mut c = ModelCoefficients::zeros(&spec);
    let at = |b: &[trie_core::model::Monomial], e: &[u32]| b.iter().position(|m| m.0 == e).unwrap();
    c.coef_e[(0, at(&spec.basis_e, &[1, 0]))] = 1.0;
    c.coef_e[(1, at(&spec.basis_e, &[0, 1]))] = 1.0;
    let f = &spec.basis_f;
    for (row, own, other, sign) in [(0, [1, 0], [0, 1], -1.0), (1, [0, 1], [1, 0], 1.0)] {
        c.coef_f[(row, at(f, &own))] = a;
        c.coef_f[(row, at(f, &other))] = sign * omega;
        c.coef_f[(row, at(f, &[own[0] + 2, own[1]]))] = -a;
        c.coef_f[(row, at(f, &[own[0], own[1] + 2]))] = -a;
    }
    c.coef_g[(0, at(&spec.basis_g, &[1, 0]))] = 1.0;
    (spec, c)
}

fn criterion9(models: &mut Vec<(String, PolyModelSpec, ModelCoefficients, TrajectoryRecord)>) -> Outcome {
    let (spec, truth) = hopf_generator(2.0, 1.0);
    let dt = 0.01;
    let steps = 1001;
    let rec = simulate_record(&spec, &truth, &[1.3, 0.0], &vec![vec![]; steps], dt, 10).unwrap();
    let split = 701;
    let (train, validation) = (rec.slice(0..split), rec.slice(split - 1..steps));

    let eq = fit(&train, &spec, &FitOptions::new(FitKind::Eq)).unwrap();
    let (_, _, val) = evaluate_model(&spec, &eq.coefs, &validation, None, &SimOptions::default()).unwrap();
    let t_val = validation.duration();
    let eq_ok = eq.solution.status == SolveStatus::Optimal && val.sim_error < 1e-6 * t_val;
    models.push(("self-identification eq".into(), spec.clone(), eq.coefs.clone(), train.clone()));

    let free = fit(&train, &spec, &FitOptions::new(FitKind::Trie)).unwrap();
    let mut pinned = FitOptions::new(FitKind::Trie);
    pinned.program.pinned = truth.to_vector().iter().enumerate().map(|(i, v)| (i, *v)).collect();
    let fixed = fit(&train, &spec, &pinned).unwrap();
    let trie_ok = free.solution.status == SolveStatus::Optimal
        && fixed.solution.status == SolveStatus::Optimal
        && free.solution.objective <= fixed.solution.objective + 1e-6;
    models.push(("self-identification trie".into(), spec.clone(), free.coefs.clone(), train.clone()));

    let frames = frames_along(&train, None).unwrap();
    let data = sample_data(&spec, &truth, &train, Some(&frames)).unwrap();
    let at_truth = LocalCostBreakdown::compute(&data, &fixed.metric, dt).total(CostKind::TrieHat, Weighting::Dt);
    Outcome {
        passed: eq_ok && trie_ok,
        detail: format!(
            "eq: {:?}, validation 𝔈 {:.3e} (< {:.1e}); trie objective {:.6e} ({:?}) vs generator-pinned {:.6e} ({:?}, direct ∫Ê⊥ {:.6e})",
            eq.solution.status,
            val.sim_error,
            1e-6 * t_val,
            free.solution.objective,
            free.solution.status,
            fixed.solution.objective,
            fixed.solution.status,
            at_truth
        ),
    }
}

fn main() {
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |k: u32| filter.is_empty() || filter.contains(&k);
    let opts = VerifyOptions::default();
    let mut models = Vec::new();
    let mut fatal = 0;
    let criteria: Vec<(u32, &str, Box<dyn FnMut(&mut Vec<_>) -> Outcome>)> = vec![
        (1, "relaxation upper bound", Box::new(|_| from_check(relaxation_bound_check(&opts), 10.0))),
        (2, "relaxation identities", Box::new(|_| from_check(relaxation_identities_check(&opts), 1.0))),
        (3, "LMI oracle gate", Box::new(|_| from_check(lmi_oracle_check(&opts), 60.0))),
        (4, "bound chain", Box::new(criterion4)),
        (5, "transverse deviation oracle", Box::new(|_| from_check(deviation_oracle_check(&opts), 60.0))),
        (6, "method comparison", Box::new(criterion6)),
        (7, "projector algebra", Box::new(|_| from_check(projector_check(&opts), 5.0))),
        (9, "self-identification", Box::new(criterion9)),
        (8, "well-posedness on grid", Box::new(|m: &mut Vec<_>| criterion8(m))),
    ];
    let mut gate_failed = false;
    for (k, name, mut f) in criteria {
        if !wanted(k) {
            continue;
        }
        if gate_failed && matches!(k, 4 | 6 | 8 | 9) {
            println!("criterion {k} {name}: FAIL (skipped: LMI oracle gate failed)");
            fatal += 1;
            continue;
        }
        let start = Instant::now();
        let out = f(&mut models);
        let verdict = if out.passed { "PASS" } else { "FAIL" };
        println!("criterion {k} {name}: {verdict} ({:.1} s) {}", start.elapsed().as_secs_f64(), out.detail);
        gate_failed |= k == 3 && !out.passed;
        if !out.passed && !OPEN.contains(&k) {
            fatal += 1;
        }
    }
    if fatal > 0 {
        eprintln!("{fatal} criteria failed");
        std::process::exit(1);
    }
}
