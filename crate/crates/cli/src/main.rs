//! `trie`: synthesize data, fit implicit polynomial models, evaluate them
//! by open-loop simulation, and run the numerical property suites.
//!
//! Exit codes: 0 ok, 1 usage or configuration error, 2 data error,
//! 3 solver failure, 4 a verification check failed.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trie_core::sdp::FitKind;
use trie_core::Error;

use commands::Outcome;
use config::RunConfig;

#[derive(Parser)]
#[command(name = "trie", version, about = "Identify limit-cycle models by transverse robust identification error")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `fit.kind`.
    #[arg(long, global = true, value_parser = parse_kind)]
    kind: Option<FitKind>,
    /// Overrides `eval.horizon` (seconds).
    #[arg(long, global = true)]
    horizon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write data.csv and truth.csv from `data.synthetic`.
    Synth,
    /// Fit a model; writes model.json, report.json and costs.csv.
    Fit,
    /// Simulate a fitted model; writes eval.json and traces.csv.
    Eval {
        /// Model file; defaults to `<out>/model.json`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Raw series CSV replacing the configured data source.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run the property suites and print a JSON summary.
    Verify {
        /// Corrupt the LMI to confirm the oracle gate fails.
        #[arg(long, hide = true)]
        inject_sign_flip: bool,
    },
}

fn parse_kind(s: &str) -> Result<FitKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_config(cli: &Cli) -> trie_core::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(kind) = cli.kind {
        cfg.fit.kind = kind;
    }
    if let Some(h) = cli.horizon {
        cfg.eval.horizon = Some(h);
    }
    if let Command::Eval { data: Some(path), .. } = &cli.command {
        cfg.data.csv = Some(path.clone());
        cfg.data.record_csv = None;
        cfg.data.synthetic = None;
        cfg.data.use_truth = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> trie_core::Result<Outcome> {
    if let Command::Verify { inject_sign_flip } = cli.command {
        return commands::verify(cli.seed.unwrap_or(0), cli.out.as_deref(), inject_sign_flip);
    }
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Synth => commands::synth(&cfg),
        Command::Fit => commands::fit_cmd(&cfg),
        Command::Eval { model, .. } => {
            let model = model.clone().unwrap_or_else(|| cfg.out.join("model.json"));
            commands::eval(&cfg, &model)
        }
        Command::Verify { .. } => unreachable!(),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) => 1,
        Error::Solver(_) | Error::Infeasible(_) => 3,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::NonMonotoneTime { .. }
        | Error::NonFinite { .. }
        | Error::InvalidData(_)
        | Error::Shape(_)
        | Error::SingularJacobian { .. } => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::SolverFailed(status)) => {
            eprintln!("error: solver finished with status {status:?}; see report.json");
            ExitCode::from(3)
        }
        Ok(Outcome::ChecksFailed) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
