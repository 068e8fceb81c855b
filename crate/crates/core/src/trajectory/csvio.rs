//! CSV formats.
//!
//! Raw series: header `t,u1,..,um,y1,..,yp`.
//! Trajectory record: header `t,x1,..,xn,xdot1,..,xdotn,u1,..,um,y1,..,yp`.
//! Rows are decimal numbers, comma separated, one sample per row.

use std::io::Read;
use std::path::Path;

use super::{smooth_and_differentiate, RawSeries, SmootherConfig, TrajectoryRecord};
use crate::error::{Error, Result};

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_table(reader: impl Read, context: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse {
            context: context.into(),
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            context: format!("{context}, row {row}"),
            message: e.to_string(),
        })?;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                context: format!("{context}, row {row}"),
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let mut vals = Vec::with_capacity(rec.len());
        for (j, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                context: format!("{context}, row {row}, column {}", header[j]),
                message: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    column: header[j].clone(),
                    row,
                });
            }
            vals.push(v);
        }
        rows.push(vals);
    }
    Ok(Table { header, rows })
}

/// Indices of columns named `{prefix}1, {prefix}2, ...` in order, which must
/// form one contiguous run.
fn numbered_columns(header: &[String], prefix: &str) -> Result<Vec<usize>> {
    let idx: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| {
            h.strip_prefix(prefix)
                .is_some_and(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
        })
        .map(|(i, _)| i)
        .collect();
    for (k, &i) in idx.iter().enumerate() {
        if header[i] != format!("{prefix}{}", k + 1) {
            return Err(Error::Parse {
                context: "header".into(),
                message: format!("expected column {prefix}{} but found {}", k + 1, header[i]),
            });
        }
        if k > 0 && i != idx[k - 1] + 1 {
            return Err(Error::Parse {
                context: "header".into(),
                message: format!("{prefix} columns are not contiguous"),
            });
        }
    }
    Ok(idx)
}

fn check_time(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    for i in 1..t.len() {
        if t[i] <= t[i - 1] {
            return Err(Error::NonMonotoneTime { row: i + 1 });
        }
    }
    Ok(t)
}

fn pick(rows: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect()
}

/// Parse a raw series from CSV text.
pub fn parse_csv(text: &str) -> Result<RawSeries> {
    parse_raw(text.as_bytes(), "csv")
}

fn parse_raw(reader: impl Read, context: &str) -> Result<RawSeries> {
    let table = read_table(reader, context)?;
    if table.header.first().map(String::as_str) != Some("t") {
        return Err(Error::Parse {
            context: context.into(),
            message: "first column must be `t`".into(),
        });
    }
    let u = numbered_columns(&table.header, "u")?;
    let y = numbered_columns(&table.header, "y")?;
    if y.is_empty() {
        return Err(Error::Parse {
            context: context.into(),
            message: "no output columns y1..yp".into(),
        });
    }
    if 1 + u.len() + y.len() != table.header.len() {
        return Err(Error::Parse {
            context: context.into(),
            message: "unexpected columns; header must be t,u1..um,y1..yp".into(),
        });
    }
    let times = check_time(&table.rows)?;
    let series = RawSeries {
        times,
        inputs: pick(&table.rows, &u),
        outputs: pick(&table.rows, &y),
    };
    series.validate()?;
    Ok(series)
}

/// Load a raw series `t,u1..um,y1..yp` from a CSV file.
pub fn load_csv(path: &Path) -> Result<RawSeries> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_raw(f, &path.display().to_string())
}

/// Write a raw series in the same format [`load_csv`] reads.
pub fn write_raw_csv(path: &Path, s: &RawSeries) -> Result<()> {
    let mut out = String::from("t");
    for j in 0..s.m() {
        out.push_str(&format!(",u{}", j + 1));
    }
    for j in 0..s.p() {
        out.push_str(&format!(",y{}", j + 1));
    }
    out.push('\n');
    for i in 0..s.len() {
        out.push_str(&fmt_f64(s.times[i]));
        for v in s.inputs[i].iter().chain(&s.outputs[i]) {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write a trajectory record as `t,x..,xdot..,u..,y..`.
pub fn write_record_csv(path: &Path, r: &TrajectoryRecord) -> Result<()> {
    let mut out = String::from("t");
    for (name, w) in [("x", r.n()), ("xdot", r.n()), ("u", r.m()), ("y", r.p())] {
        for j in 0..w {
            out.push_str(&format!(",{name}{}", j + 1));
        }
    }
    out.push('\n');
    for i in 0..r.len() {
        out.push_str(&fmt_f64(r.time(i)));
        for v in r.x[i].iter().chain(&r.xdot[i]).chain(&r.u[i]).chain(&r.y[i]) {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parse a trajectory record; `ẍ̃` is recomputed by differentiating the
/// `ẋ̃` columns with `smoother`.
pub fn parse_record_csv(text: &str, smoother: &SmootherConfig) -> Result<TrajectoryRecord> {
    parse_record(text.as_bytes(), "record csv", smoother)
}

pub fn load_record_csv(path: &Path, smoother: &SmootherConfig) -> Result<TrajectoryRecord> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_record(f, &path.display().to_string(), smoother)
}

fn parse_record(reader: impl Read, context: &str, smoother: &SmootherConfig) -> Result<TrajectoryRecord> {
    let table = read_table(reader, context)?;
    if table.header.first().map(String::as_str) != Some("t") {
        return Err(Error::Parse {
            context: context.into(),
            message: "first column must be `t`".into(),
        });
    }
    let x = numbered_columns(&table.header, "x")?;
    let xd = numbered_columns(&table.header, "xdot")?;
    let u = numbered_columns(&table.header, "u")?;
    let y = numbered_columns(&table.header, "y")?;
    if x.is_empty() || x.len() != xd.len() || y.is_empty() || 1 + 2 * x.len() + u.len() + y.len() != table.header.len() {
        return Err(Error::Parse {
            context: context.into(),
            message: "header must be t,x1..xn,xdot1..xdotn,u1..um,y1..yp".into(),
        });
    }
    let times = check_time(&table.rows)?;
    let n_samples = times.len();
    if n_samples < 3 {
        return Err(Error::InvalidData("record needs at least 3 samples".into()));
    }
    let dt = (times[n_samples - 1] - times[0]) / (n_samples - 1) as f64;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-6 * dt);
    if !uniform {
        return Err(Error::InvalidData("record csv must be uniformly sampled".into()));
    }
    let xdot = pick(&table.rows, &xd);
    let n = x.len();
    let mut acc_cols = Vec::with_capacity(n);
    for j in 0..n {
        let ch: Vec<f64> = xdot.iter().map(|r| r[j]).collect();
        acc_cols.push(smooth_and_differentiate(&ch, dt, smoother)?.1);
    }
    let xddot = (0..n_samples).map(|i| acc_cols.iter().map(|c| c[i]).collect()).collect();
    let rec = TrajectoryRecord {
        dt,
        t0: times[0],
        x: pick(&table.rows, &x),
        xdot,
        xddot,
        u: pick(&table.rows, &u),
        y: pick(&table.rows, &y),
    };
    rec.validate()?;
    Ok(rec)
}

/// Shortest decimal that round-trips to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
