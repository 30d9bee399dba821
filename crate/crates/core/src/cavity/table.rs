//! CSV files for reflectivity maps and `ω_eff` traces.
//!
//! Sweep matrix:
//!
//! ```text
//! # spincav cdmr v1
//! # <comment lines>
//! B_T\freq_Hz,<f_1>,<f_2>,...
//! <B_1>,<R_11>,<R_12>,...
//! ```
//!
//! Trace:
//!
//! ```text
//! # spincav omega_eff v1
//! # <comment lines>
//! B_T,omega_eff_over_omega_c,omega_eff_Hz
//! ```
//!
//! Numbers are written in shortest round-trip exponent form.

use std::io::{BufRead, Write};

use super::SweepResult;
use crate::constants::rad_to_hz;
use crate::error::{Error, Result};

const SWEEP_MAGIC: &str = "# spincav cdmr v1";
const TRACE_MAGIC: &str = "# spincav omega_eff v1";
const SWEEP_CORNER: &str = "B_T\\freq_Hz";
const TRACE_COLUMNS: &str = "B_T,omega_eff_over_omega_c,omega_eff_Hz";

/// A sweep matrix in file units.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub fields_t: Vec<f64>,
    pub freqs_hz: Vec<f64>,
    /// Row-major, one row per field.
    pub values: Vec<f64>,
    pub comments: Vec<String>,
}

impl SweepTable {
    pub fn from_result(result: &SweepResult, comments: &[String]) -> Self {
        Self {
            fields_t: result.fields.clone(),
            freqs_hz: result.probe.iter().map(|&w| rad_to_hz(w)).collect(),
            values: result.reflectivity.clone(),
            comments: comments.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaEffTable {
    pub fields_t: Vec<f64>,
    pub ratio: Vec<f64>,
    pub freqs_hz: Vec<f64>,
    pub comments: Vec<String>,
}

impl OmegaEffTable {
    pub fn from_result(result: &SweepResult, omega_c: f64, comments: &[String]) -> Self {
        Self {
            fields_t: result.fields.clone(),
            ratio: result.omega_eff.iter().map(|w| w / omega_c).collect(),
            freqs_hz: result.omega_eff.iter().map(|&w| rad_to_hz(w)).collect(),
            comments: comments.to_vec(),
        }
    }
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")
}

fn write_comments<W: Write>(out: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut out: W, table: &SweepTable) -> Result<()> {
    writeln!(out, "{SWEEP_MAGIC}")?;
    write_comments(&mut out, &table.comments)?;
    writeln!(out, "{SWEEP_CORNER},{}", join(table.freqs_hz.iter().copied()))?;
    let n = table.freqs_hz.len();
    for (i, b) in table.fields_t.iter().enumerate() {
        writeln!(out, "{b:e},{}", join(table.values[i * n..(i + 1) * n].iter().copied()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_omega_eff_csv<W: Write>(mut out: W, table: &OmegaEffTable) -> Result<()> {
    writeln!(out, "{TRACE_MAGIC}")?;
    write_comments(&mut out, &table.comments)?;
    writeln!(out, "{TRACE_COLUMNS}")?;
    for i in 0..table.fields_t.len() {
        writeln!(out, "{:e},{:e},{:e}", table.fields_t[i], table.ratio[i], table.freqs_hz[i])?;
    }
    out.flush()?;
    Ok(())
}

fn parse_row(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse { line: line_no, message: format!("bad number '{s}': {e}") })
        })
        .collect()
}

/// Splits a file into its comment lines and numbered data lines, checking
/// the magic first line and the column header.
fn split_file<R: BufRead>(reader: R, magic: &str, header_prefix: &str) -> Result<(Vec<String>, String, Vec<(usize, String)>)> {
    let mut comments = Vec::new();
    let mut header = None;
    let mut data = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if n == 1 {
            if line.trim_end() != magic {
                return Err(Error::Parse { line: 1, message: format!("expected '{magic}'") });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if header.is_none() {
            if let Some(c) = line.strip_prefix("# ") {
                comments.push(c.to_string());
                continue;
            }
            if !line.starts_with(header_prefix) {
                return Err(Error::Parse { line: n, message: format!("expected column header starting with '{header_prefix}'") });
            }
            header = Some(line);
            continue;
        }
        data.push((n, line));
    }
    let header = header.ok_or(Error::Parse { line: 1, message: "missing column header".into() })?;
    Ok((comments, header, data))
}

pub fn read_sweep_csv<R: BufRead>(reader: R) -> Result<SweepTable> {
    let (comments, header, data) = split_file(reader, SWEEP_MAGIC, SWEEP_CORNER)?;
    let header_line = comments.len() + 2;
    let freqs_hz = parse_row(&header[SWEEP_CORNER.len() + 1..], header_line)?;
    let mut fields_t = Vec::with_capacity(data.len());
    let mut values = Vec::with_capacity(data.len() * freqs_hz.len());
    for (n, line) in data {
        let row = parse_row(&line, n)?;
        if row.len() != freqs_hz.len() + 1 {
            return Err(Error::Parse { line: n, message: format!("expected {} columns, got {}", freqs_hz.len() + 1, row.len()) });
        }
        fields_t.push(row[0]);
        values.extend_from_slice(&row[1..]);
    }
    Ok(SweepTable { fields_t, freqs_hz, values, comments })
}

pub fn read_omega_eff_csv<R: BufRead>(reader: R) -> Result<OmegaEffTable> {
    let (comments, header, data) = split_file(reader, TRACE_MAGIC, TRACE_COLUMNS)?;
    if header.trim_end() != TRACE_COLUMNS {
        return Err(Error::Parse { line: comments.len() + 2, message: format!("expected '{TRACE_COLUMNS}'") });
    }
    let mut table = OmegaEffTable { fields_t: vec![], ratio: vec![], freqs_hz: vec![], comments };
    for (n, line) in data {
        let row = parse_row(&line, n)?;
        if row.len() != 3 {
            return Err(Error::Parse { line: n, message: format!("expected 3 columns, got {}", row.len()) });
        }
        table.fields_t.push(row[0]);
        table.ratio.push(row[1]);
        table.freqs_hz.push(row[2]);
    }
    Ok(table)
}
