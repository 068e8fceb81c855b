use std::path::{Path, PathBuf};

use serde::Serialize;
use trie_core::model::{load_model, sample_data, save_model, ModelFile, PolyModelSpec};
use trie_core::objective::LocalCostBreakdown;
use trie_core::report::{evaluate_model, fit_report, SimSummary};
use trie_core::sdp::{fit, FitKind, LmiMutation, SolveStatus};
use trie_core::simulate::{write_traces_csv, SimOptions};
use trie_core::trajectory::{gen_synthetic, write_raw_csv, write_record_csv};
use trie_core::verify::{run_all, VerifyOptions};
use trie_core::{Error, Result};

use crate::config::{split_record, RunConfig};

pub const EVAL_FORMAT: &str = "trie-eval/1";

/// What a command reports back to `main`.
pub enum Outcome {
    Ok,
    SolverFailed(SolveStatus),
    ChecksFailed,
}

fn out_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::InvalidConfig(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializes");
    std::fs::write(path, text).map_err(|e| Error::InvalidData(format!("cannot write {}: {e}", path.display())))
}

/// `data.csv` (measured raw series) and `truth.csv` (noiseless state record).
pub fn synth(cfg: &RunConfig) -> Result<Outcome> {
    let (raw, truth) = gen_synthetic(&cfg.synthetic_run()?)?;
    let dir = out_dir(&cfg.out)?;
    write_raw_csv(&dir.join("data.csv"), &raw)?;
    write_record_csv(&dir.join("truth.csv"), &truth)?;
    eprintln!("wrote {} samples to {}", raw.len(), dir.display());
    Ok(Outcome::Ok)
}

/// `model.json`, `report.json` and `costs.csv`.
pub fn fit_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let (rec, state) = cfg.load_record(None)?;
    let (train, validation) = split_record(&rec, cfg.eval.train_fraction);
    let m = &cfg.model;
    let spec = PolyModelSpec::dense(rec.n(), rec.m(), rec.p(), m.deg_e, m.deg_f_x, m.deg_f_u, m.deg_g)?;
    let opts = cfg.fit_options();
    let outcome = fit(&train, &spec, &opts)?;
    let kind = opts.program.kind;

    let mut report = fit_report(&spec, &outcome, kind, &train, validation.as_ref(), &SimOptions::default())?;
    report.config_hash = Some(cfg.hash());
    report.seed = Some(cfg.seed);

    let dir = out_dir(&cfg.out)?;
    let metric_q = (kind != FitKind::Eq).then_some(&outcome.metric.q);
    save_model(&dir.join("model.json"), &ModelFile::new(&spec, &outcome.coefs, metric_q, state))?;
    report.write(&dir.join("report.json"))?;
    let data = sample_data(&spec, &outcome.coefs, &train, Some(&outcome.frames))?;
    LocalCostBreakdown::compute(&data, &outcome.metric, train.dt).write_csv(&dir.join("costs.csv"))?;

    let status = outcome.solution.status;
    eprintln!(
        "{kind} fit: {status:?}, objective {:.6e}, {} samples; wrote {}",
        report.objective,
        train.len(),
        dir.display()
    );
    Ok(if status == SolveStatus::Optimal {
        Outcome::Ok
    } else {
        Outcome::SolverFailed(status)
    })
}

#[derive(Serialize)]
struct EvalReport {
    format: String,
    config_hash: String,
    seed: u64,
    /// Same segment and settings as the fit report's training metrics.
    train: SimSummary,
    validation: Option<SimSummary>,
    /// The whole record up to the horizon; these are the traces written.
    horizon_run: SimSummary,
}

/// Simulate a saved model against the configured data: `eval.json` and
/// `traces.csv` over `[0, horizon]`.
pub fn eval(cfg: &RunConfig, model: &Path) -> Result<Outcome> {
    let file = load_model(model)?;
    let coefs = file.coefficients()?;
    let (rec, _) = cfg.load_record(file.state)?;
    let spec = &file.spec;
    if (rec.n(), rec.m(), rec.p()) != (spec.n, spec.m, spec.p) {
        return Err(Error::Shape(format!(
            "data has (n, m, p) = ({}, {}, {}) but the model expects ({}, {}, {})",
            rec.n(),
            rec.m(),
            rec.p(),
            spec.n,
            spec.m,
            spec.p
        )));
    }
    let sim_opts = SimOptions::default();
    let (train, validation) = split_record(&rec, cfg.eval.train_fraction);
    let train_summary = evaluate_model(spec, &coefs, &train, None, &sim_opts)?.2;
    let validation_summary = match &validation {
        Some(v) => Some(evaluate_model(spec, &coefs, v, None, &sim_opts)?.2),
        None => None,
    };
    let (sim, metrics, horizon_run) = evaluate_model(spec, &coefs, &rec, cfg.eval.horizon, &sim_opts)?;

    let dir = out_dir(&cfg.out)?;
    let horizon_rec = rec.slice(0..horizon_run.samples);
    write_traces_csv(&dir.join("traces.csv"), &sim, &horizon_rec, &metrics)?;
    let report = EvalReport {
        format: EVAL_FORMAT.to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        train: train_summary,
        validation: validation_summary,
        horizon_run,
    };
    write_json(&dir.join("eval.json"), &report)?;
    eprintln!(
        "horizon {:.3} s: sim error {:.6e}, orbital {:.6e}, {:?}",
        report.horizon_run.horizon_s, report.horizon_run.sim_error, report.horizon_run.orbital_sim_error, report.horizon_run.status
    );
    Ok(Outcome::Ok)
}

/// Run the property suites; the JSON summary goes to stdout and, with an
/// output directory, to `verify.json`.
pub fn verify(seed: u64, out: Option<&Path>, inject_sign_flip: bool) -> Result<Outcome> {
    let opts = VerifyOptions {
        seed,
        mutation: if inject_sign_flip {
            LmiMutation::FlipMinusResidual
        } else {
            LmiMutation::None
        },
        ..VerifyOptions::default()
    };
    let summary = run_all(&opts);
    println!("{}", summary.to_json());
    if let Some(dir) = out {
        std::fs::write(out_dir(dir)?.join("verify.json"), summary.to_json())
            .map_err(|e| Error::InvalidData(format!("cannot write verify.json: {e}")))?;
    }
    for c in &summary.checks {
        eprintln!("{} {} ({:.2} s)", if c.passed { "PASS" } else { "FAIL" }, c.name, c.elapsed_s);
    }
    Ok(if summary.passed { Outcome::Ok } else { Outcome::ChecksFailed })
}
