//! Report rendering. Floats in CSV carry 17 significant digits.

use ballistic_core::C64;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn complex(z: C64) -> String {
    format!("{:.16e}{:+.16e}i", z.re, z.im)
}

/// CSV text with a header row.
pub fn csv_table(header: &[String], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::internal(format!("csv: {e}"));
    w.write_record(header).map_err(internal)?;
    for r in rows {
        w.write_record(r).map_err(internal)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::internal(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::internal(e.to_string()))
}

pub fn json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::internal(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}
