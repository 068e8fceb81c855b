//! Run configuration: one TOML document, every field defaulted.
//!
//! ```toml
//! seed = 0                 # seeds the synthetic generator
//! out = "out"              # output directory
//!
//! [data]                   # exactly one source
//! csv = "data.csv"         # raw series t,u..,y..; state built from [state]
//! # record_csv = "x.csv"   # full state record t,x..,xdot..,u..,y..
//! # use_truth = false      # synthetic only: fit the noiseless full state
//! [data.synthetic]
//! system = { kind = "van_der_pol", mu = 1.0 }
//! duration = 30.0
//! dt = 0.01
//! noise_std = 0.01
//!
//! [state]                  # Laguerre bank and smoother
//! pole = 2.0               # required when a state is built
//! order = 2
//! window = 11
//! poly_degree = 3
//!
//! [model]
//! deg_e = 1
//! deg_f_x = 3
//! deg_f_u = 1
//! deg_g = 1
//!
//! [fit]
//! kind = "trie"            # eq | rie | trie
//! lambda = 0.0
//! metric_floor = 1e-6
//! sos_margin = 0.0
//! max_iter = 200
//! tol = 1e-8
//! feas_tol = 1e-6
//!
//! [eval]
//! train_fraction = 0.7     # the rest is held out for validation
//! # horizon = 10.0         # seconds of the record simulated by `eval`
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trie_core::sdp::{FitKind, FitOptions, SolverOptions};
use trie_core::trajectory::{
    build_state, gen_synthetic, load_csv, load_record_csv, LaguerreBank, RawSeries, SmootherConfig, StateBuilder,
    SyntheticRun, TrajectoryRecord,
};
use trie_core::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub data: DataConfig,
    pub state: StateConfig,
    pub model: ModelConfig,
    pub fit: FitConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            data: DataConfig::default(),
            state: StateConfig::default(),
            model: ModelConfig::default(),
            fit: FitConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub csv: Option<PathBuf>,
    pub record_csv: Option<PathBuf>,
    pub synthetic: Option<SyntheticRun>,
    pub use_truth: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateConfig {
    pub pole: Option<f64>,
    pub order: usize,
    pub window: usize,
    pub poly_degree: usize,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig {
            pole: None,
            order: 2,
            window: 11,
            poly_degree: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub deg_e: u32,
    pub deg_f_x: u32,
    pub deg_f_u: u32,
    pub deg_g: u32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            deg_e: 1,
            deg_f_x: 3,
            deg_f_u: 1,
            deg_g: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub kind: FitKind,
    pub lambda: f64,
    pub metric_floor: f64,
    pub sos_margin: f64,
    pub v_threshold: Option<f64>,
    pub max_iter: u32,
    pub tol: f64,
    pub feas_tol: f64,
    pub time_limit_s: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        let o = FitOptions::default();
        FitConfig {
            kind: o.program.kind,
            lambda: o.program.lambda,
            metric_floor: o.program.metric_floor,
            sos_margin: o.program.sos_margin,
            v_threshold: None,
            max_iter: o.solver.max_iter,
            tol: o.solver.tol,
            feas_tol: o.solver.feas_tol,
            time_limit_s: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub train_fraction: f64,
    pub horizon: Option<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_fraction: 0.7,
            horizon: None,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file; relative data paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.data.csv, &mut cfg.data.record_csv].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let sources = [self.data.csv.is_some(), self.data.record_csv.is_some(), self.data.synthetic.is_some()];
        if sources.iter().filter(|s| **s).count() > 1 {
            return Err(Error::InvalidConfig("give at most one of data.csv, data.record_csv, data.synthetic".into()));
        }
        if self.data.use_truth && self.data.synthetic.is_none() {
            return Err(Error::InvalidConfig("data.use_truth needs data.synthetic".into()));
        }
        if !(self.eval.train_fraction > 0.0 && self.eval.train_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eval.train_fraction must be in (0, 1], got {}",
                self.eval.train_fraction
            )));
        }
        if let Some(h) = self.eval.horizon {
            if !(h > 0.0) {
                return Err(Error::InvalidConfig(format!("eval.horizon must be positive, got {h}")));
            }
        }
        if !(self.fit.lambda >= 0.0 && self.fit.metric_floor > 0.0 && self.fit.sos_margin >= 0.0) {
            return Err(Error::InvalidConfig("fit.lambda and fit.sos_margin must be >= 0, fit.metric_floor > 0".into()));
        }
        if !(self.fit.tol > 0.0 && self.fit.feas_tol > 0.0) {
            return Err(Error::InvalidConfig("fit.tol and fit.feas_tol must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration (after flag overrides).
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }

    pub fn synthetic_run(&self) -> Result<SyntheticRun> {
        let mut run = self
            .data
            .synthetic
            .clone()
            .ok_or_else(|| Error::InvalidConfig("data.synthetic is required".into()))?;
        run.seed = self.seed;
        Ok(run)
    }

    pub fn smoother(&self) -> Result<SmootherConfig> {
        SmootherConfig::new(self.state.window, self.state.poly_degree)
    }

    pub fn state_builder(&self) -> Result<StateBuilder> {
        let pole = self
            .state
            .pole
            .ok_or_else(|| Error::InvalidConfig("state.pole is required to build a state from outputs".into()))?;
        Ok(StateBuilder {
            bank: LaguerreBank::new(pole, self.state.order)?,
            smoother: self.smoother()?,
        })
    }

    pub fn fit_options(&self) -> FitOptions {
        let mut o = FitOptions::new(self.fit.kind);
        o.program.lambda = self.fit.lambda;
        o.program.metric_floor = self.fit.metric_floor;
        o.program.sos_margin = self.fit.sos_margin;
        o.v_threshold = self.fit.v_threshold;
        o.solver = SolverOptions {
            max_iter: self.fit.max_iter,
            tol: self.fit.tol,
            feas_tol: self.fit.feas_tol,
            time_limit_s: self.fit.time_limit_s.unwrap_or(f64::INFINITY),
            ..SolverOptions::default()
        };
        o
    }

    /// Build the state record from the data source. `state` overrides the
    /// configured Laguerre/smoother settings (used when a model file records
    /// how its state was built). Returns the builder actually used.
    pub fn load_record(&self, state: Option<StateBuilder>) -> Result<(TrajectoryRecord, Option<StateBuilder>)> {
        let from_raw = |raw: &RawSeries| -> Result<(TrajectoryRecord, Option<StateBuilder>)> {
            let sb = match state {
                Some(sb) => sb,
                None => self.state_builder()?,
            };
            Ok((build_state(raw, &sb.bank, &sb.smoother)?, Some(sb)))
        };
        if let Some(path) = &self.data.csv {
            from_raw(&load_csv(path)?)
        } else if let Some(path) = &self.data.record_csv {
            Ok((load_record_csv(path, &self.smoother()?)?, None))
        } else if self.data.synthetic.is_some() {
            let (raw, truth) = gen_synthetic(&self.synthetic_run()?)?;
            if self.data.use_truth {
                Ok((truth, None))
            } else {
                from_raw(&raw)
            }
        } else {
            Err(Error::InvalidConfig("no data source: set data.csv, data.record_csv or data.synthetic".into()))
        }
    }
}

/// Split a record into the training prefix and the held-out rest (sharing
/// the boundary sample). No validation part when `fraction` is 1 or the rest
/// would have fewer than 3 samples.
pub fn split_record(rec: &TrajectoryRecord, fraction: f64) -> (TrajectoryRecord, Option<TrajectoryRecord>) {
    let n = rec.len();
    let k = ((fraction * (n - 1) as f64).round() as usize + 1).clamp(2.min(n), n);
    let train = rec.slice(0..k);
    let validation = (n >= k + 2).then(|| rec.slice(k - 1..n));
    (train, validation)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn full_document_parses() {
        let cfg = RunConfig::parse(
            r#"
            seed = 7
            [data.synthetic]
            system = { kind = "van_der_pol", mu = 1.5 }
            duration = 5.0
            dt = 0.01
            noise_std = 0.01
            [state]
            pole = 2.0
            [fit]
            kind = "rie"
            lambda = 0.1
            [eval]
            horizon = 3.0
            "#,
        )
        .unwrap();
        assert_eq!(cfg.fit.kind, FitKind::Rie);
        assert_eq!(cfg.synthetic_run().unwrap().seed, 7);
        assert_eq!(cfg.fit_options().program.lambda, 0.1);
        let (rec, sb) = cfg.load_record(None).unwrap();
        assert_eq!((rec.n(), rec.len()), (3, 501));
        assert_eq!(sb.unwrap().bank.pole, 2.0);
    }

    #[test]
    fn rejects_bad_documents() {
        for bad in [
            "bogus = 1",
            "[fit]\nkind = \"ls\"",
            "[eval]\ntrain_fraction = 0.0",
            "[data]\ncsv = \"a.csv\"\nrecord_csv = \"b.csv\"",
            "[data]\nuse_truth = true",
            "[fit]\nlambda = -1.0",
        ] {
            assert!(matches!(RunConfig::parse(bad), Err(Error::InvalidConfig(_))), "{bad}");
        }
    }

    #[test]
    fn pole_is_required_to_build_a_state() {
        let cfg = RunConfig::parse("[data.synthetic]\nsystem = { kind = \"van_der_pol\", mu = 1.0 }\nduration = 1.0\ndt = 0.01")
            .unwrap();
        assert!(matches!(cfg.load_record(None), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        b.seed = u64::MAX;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn split_shares_the_boundary_sample() {
        let cfg = RunConfig::parse(
            "[data]\nuse_truth = true\n[data.synthetic]\nsystem = { kind = \"van_der_pol\", mu = 1.0 }\nduration = 1.0\ndt = 0.01",
        )
        .unwrap();
        let (rec, _) = cfg.load_record(None).unwrap();
        let (train, val) = split_record(&rec, 0.7);
        let val = val.unwrap();
        assert_eq!(train.len() + val.len(), rec.len() + 1);
        assert_eq!(train.x.last(), val.x.first());
        assert_eq!(val.t0, train.time(train.len() - 1));
        let (all, none) = split_record(&rec, 1.0);
        assert_eq!(all.len(), rec.len());
        assert!(none.is_none());
    }

    fn record(n: usize) -> TrajectoryRecord {
        let col = |v: f64| vec![vec![v]; n];
        TrajectoryRecord {
            dt: 0.1,
            t0: 0.0,
            x: (0..n).map(|i| vec![i as f64]).collect(),
            xdot: col(1.0),
            xddot: col(0.0),
            u: col(0.0),
            y: (0..n).map(|i| vec![i as f64]).collect(),
        }
    }

    proptest::proptest! {
        #[test]
        fn split_covers_the_record(n in 3usize..400, fraction in 0.01f64..=1.0) {
            let rec = record(n);
            let (train, val) = split_record(&rec, fraction);
            proptest::prop_assert!(train.len() >= 2);
            proptest::prop_assert_eq!(&train.x[..], &rec.x[..train.len()]);
            match val {
                Some(v) => {
                    proptest::prop_assert!(v.len() >= 3);
                    proptest::prop_assert_eq!(train.len() + v.len(), n + 1);
                    proptest::prop_assert_eq!(v.x.last(), rec.x.last());
                }
                None => proptest::prop_assert!(train.len() + 2 > n),
            }
        }

        #[test]
        fn hash_is_a_function_of_the_document(seed in 0u64..i64::MAX as u64, lambda in 0.0f64..10.0) {
            let text = format!("seed = {seed}\n[fit]\nlambda = {lambda:?}\n");
            let (a, b) = (RunConfig::parse(&text).unwrap(), RunConfig::parse(&text).unwrap());
            proptest::prop_assert_eq!(a.hash(), b.hash());
            let mut c = a.clone();
            c.fit.lambda = lambda + 1.0;
            proptest::prop_assert_ne!(a.hash(), c.hash());
        }
    }
}
