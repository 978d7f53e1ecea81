use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use super::trials::SummaryRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 14] = [
    "scheme",
    "sweep_var",
    "sweep_value",
    "trials",
    "rate_mean",
    "rate_se",
    "power_mean",
    "power_se",
    "ee_mean",
    "ee_se",
    "se_mean",
    "se_se",
    "mse_db_mean",
    "bits_mean",
];

/// Six significant digits, `%g` style: fixed notation for exponents in
/// [-5, 5], scientific otherwise, trailing zeros dropped.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Rounding first settles the exponent (9.999995 becomes 1.00000e1).
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn record(row: &SummaryRow) -> [String; 14] {
    let f = format_sig6;
    [
        row.scheme.label().to_string(),
        row.sweep_var.map_or("none", |v| v.label()).to_string(),
        row.sweep_value.map_or_else(String::new, f),
        row.trials.to_string(),
        f(row.rate.mean),
        f(row.rate.se),
        f(row.power.mean),
        f(row.power.se),
        f(row.ee.mean),
        f(row.ee.se),
        f(row.se.mean),
        f(row.se.se),
        f(row.mse_db.mean),
        f(row.bits.mean),
    ]
}

/// Writes the table as CSV to any sink.
pub fn write_csv<W: Write>(rows: &[SummaryRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", CSV_HEADER.join(","))?;
    for row in rows {
        writeln!(out, "{}", record(row).join(","))?;
    }
    out.flush()
}

/// Writes the table to `path`, replacing any existing file.
pub fn emit_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_csv(rows, BufWriter::new(file)).map_err(io_err)
}
