//! Model file: a JSON document
//!
//! ```text
//! {
//!   "format": "trie-model/1",
//!   "spec": { "n", "m", "p", "deg_e", "deg_f_x", "deg_f_u", "deg_g",
//!             "basis_e": [[exponents..], ..], "basis_f": .., "basis_g": .. },
//!   "coef_e": [[row 0..], ..],   // n × |basis_e|
//!   "coef_f": [[..], ..],        // n × |basis_f|
//!   "coef_g": [[..], ..],        // p × |basis_g|
//!   "metric_q": [[..], ..] | null,
//!   "state": { "bank": {"pole", "order"}, "smoother": {"window", "poly_degree"} } | null
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so a save/load cycle is
//! bit-exact.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ModelCoefficients, PolyModelSpec};
use crate::error::{Error, Result};
use crate::trajectory::StateBuilder;

pub const MODEL_FORMAT: &str = "trie-model/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub spec: PolyModelSpec,
    pub coef_e: Vec<Vec<f64>>,
    pub coef_f: Vec<Vec<f64>>,
    pub coef_g: Vec<Vec<f64>>,
    #[serde(default)]
    pub metric_q: Option<Vec<Vec<f64>>>,
    /// How the state was built from raw input/output data, if it was.
    #[serde(default)]
    pub state: Option<StateBuilder>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn from_rows(what: &str, r: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if r.len() != nrows || r.iter().any(|row| row.len() != ncols) {
        return Err(Error::shape(format!("{what} must be {nrows} × {ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| r[i][j]))
}

impl ModelFile {
    pub fn new(spec: &PolyModelSpec, coefs: &ModelCoefficients, metric_q: Option<&DMatrix<f64>>, state: Option<StateBuilder>) -> Self {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            spec: spec.clone(),
            coef_e: rows(&coefs.coef_e),
            coef_f: rows(&coefs.coef_f),
            coef_g: rows(&coefs.coef_g),
            metric_q: metric_q.map(rows),
            state,
        }
    }

    pub fn coefficients(&self) -> Result<ModelCoefficients> {
        let s = &self.spec;
        let c = ModelCoefficients {
            coef_e: from_rows("coef_e", &self.coef_e, s.n, s.basis_e.len())?,
            coef_f: from_rows("coef_f", &self.coef_f, s.n, s.basis_f.len())?,
            coef_g: from_rows("coef_g", &self.coef_g, s.p, s.basis_g.len())?,
        };
        c.check(s)?;
        Ok(c)
    }

    pub fn metric(&self) -> Result<Option<DMatrix<f64>>> {
        self.metric_q
            .as_ref()
            .map(|q| from_rows("metric_q", q, self.spec.n, self.spec.n))
            .transpose()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(s).map_err(|e| Error::Parse {
            context: "model file".into(),
            message: e.to_string(),
        })?;
        if f.format != MODEL_FORMAT {
            return Err(Error::Parse {
                context: "model file".into(),
                message: format!("unsupported format {:?}", f.format),
            });
        }
        f.spec.validate()?;
        Ok(f)
    }
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<()> {
    std::fs::write(path, file.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_json(&s)
}
