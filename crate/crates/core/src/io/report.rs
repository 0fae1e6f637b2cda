//! CSV emission for lab reports and sweeps.

use std::io::Write;

use crate::error::{Error, Result};
use crate::harness::{EdScalingReport, ThresholdReport};
use crate::lab::RatioReport;

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

pub const RATIO_HEADER: [&str; 13] = [
    "check",
    "passed",
    "n_train",
    "n_refined",
    "n_test",
    "train_max",
    "c_fit",
    "test_max",
    "test_ratio",
    "stratum_0",
    "stratum_1",
    "worst_train",
    "worst_test",
];

pub fn write_ratio_reports_csv<W: Write>(out: W, reports: &[RatioReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RATIO_HEADER).map_err(csv_err)?;
    for r in reports {
        let (s0, s1) = r.strata.map_or((String::new(), String::new()), |s| (s[0].to_string(), s[1].to_string()));
        w.write_record([
            r.lemma.clone(),
            r.passed.to_string(),
            r.n_train.to_string(),
            r.n_refined.to_string(),
            r.n_test.to_string(),
            num(r.train_max),
            num(r.c_fit),
            num(r.test_max),
            num(r.test_ratio),
            s0,
            s1,
            r.worst_train.to_string(),
            r.worst_test.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub const THRESHOLD_HEADER: [&str; 5] = ["kappa", "a_star", "verdict", "T_max", "seed"];

/// One row per κ; `a_star` is empty when every tested amplitude was unstable.
pub fn write_threshold_csv<W: Write>(out: W, report: &ThresholdReport, t_max: impl Fn(f64) -> f64, seed: u64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(THRESHOLD_HEADER).map_err(csv_err)?;
    for p in &report.points {
        w.write_record([
            num(p.kappa),
            p.a_star.map(num).unwrap_or_default(),
            p.verdict.as_str().to_string(),
            num(t_max(p.kappa)),
            seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub const ED_HEADER: [&str; 7] = ["kappa", "rate", "residual", "half_width", "n", "window_lo", "window_hi"];

pub fn write_ed_csv<W: Write>(out: W, report: &EdScalingReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ED_HEADER).map_err(csv_err)?;
    for (k, f) in report.kappas.iter().zip(&report.rates) {
        w.write_record([
            num(*k),
            num(f.value),
            num(f.residual),
            num(f.half_width),
            f.n.to_string(),
            num(f.window.0),
            num(f.window.1),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the named numeric columns of a CSV with a header row. Empty cells become `None`.
pub fn read_columns<R: std::io::Read>(input: R, names: &[&str]) -> Result<Vec<Vec<Option<f64>>>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == *n)
                .ok_or_else(|| Error::Config(format!("column `{n}` not found")))
        })
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        for (c, &i) in idx.iter().enumerate() {
            let cell = rec.get(i).unwrap_or("").trim();
            let v = if cell.is_empty() {
                None
            } else {
                Some(cell.parse::<f64>().map_err(|e| {
                    Error::Config(format!("row {}, column `{}`: {e}", line + 2, names[c]))
                })?)
            };
            cols[c].push(v);
        }
    }
    Ok(cols)
}
