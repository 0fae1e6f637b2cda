use std::io::Write;

use super::DiagnosticsRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 16] = [
    "t",
    "E",
    "D",
    "Estar",
    "u1neq_L2",
    "u2_L2",
    "u2hat_L1",
    "thetaneq_L2",
    "hs_half_norm",
    "diss_visc",
    "diss_u2_weighted",
    "diss_k13",
    "diss_upsilon",
    "diss_t3",
    "dEstar_dt_fd",
    "flag",
];

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes the header and one line per row; numbers carry 12 significant digits and
/// missing entries are empty cells.
pub fn write_rows_csv<W: Write>(out: W, rows: &[DiagnosticsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            num(r.t),
            num(r.e),
            opt(r.d),
            opt(r.estar),
            num(r.u1neq_l2),
            num(r.u2_l2),
            num(r.u2hat_l1),
            num(r.thetaneq_l2),
            num(r.hs_half_norm),
            opt(r.diss_visc),
            opt(r.diss_u2_weighted),
            opt(r.diss_k13),
            opt(r.diss_upsilon),
            opt(r.diss_t3),
            opt(r.destar_dt_fd),
            r.flag.as_str().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
