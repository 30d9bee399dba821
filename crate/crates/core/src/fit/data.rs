use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::constants::hz_to_rad;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdmrRecord {
    /// |B|, T
    pub field: f64,
    /// Observed dip frequencies, rad/s.
    pub lines: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdmrDataset {
    pub records: Vec<OdmrRecord>,
}

impl OdmrDataset {
    pub fn new(records: Vec<OdmrRecord>) -> Result<Self> {
        let d = Self { records };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.records.is_empty() {
            errors.push("ODMR dataset is empty".to_string());
        }
        for (i, r) in self.records.iter().enumerate() {
            if !(r.field.is_finite() && r.field >= 0.0) {
                errors.push(format!("record {i}: field must be finite and >= 0, got {}", r.field));
            }
            if r.lines.is_empty() {
                errors.push(format!("record {i}: no lines"));
            }
            if r.lines.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
                errors.push(format!("record {i}: line frequencies must be finite and positive"));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }

    /// Records sorted by field, lines ascending within each record.
    pub fn canonical(&self) -> Self {
        let mut records = self.records.clone();
        for r in &mut records {
            r.lines.sort_by(f64::total_cmp);
        }
        records.sort_by(|a, b| {
            a.field.total_cmp(&b.field).then_with(|| {
                a.lines
                    .iter()
                    .zip(&b.lines)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(a.lines.len().cmp(&b.lines.len()))
            })
        });
        Self { records }
    }
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader.lines().enumerate().map(|(i, l)| (i + 1, l))
}

fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| Error::Parse { line: lineno, message: format!("not a number: {:?}", t.trim()) })
        })
        .collect()
}

/// Rows of numbers, skipping `#` comments, blank lines and a single
/// non-numeric header before the first data row.
fn read_rows<R: BufRead>(reader: R) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rows = Vec::new();
    let mut header_allowed = true;
    for (lineno, line) in data_lines(reader) {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match parse_row(t, lineno) {
            Ok(v) => {
                header_allowed = false;
                rows.push((lineno, v));
            }
            Err(e) if header_allowed => {
                header_allowed = false;
                log::debug!("skipping header line {lineno}: {e}");
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// `B_T,freq_Hz[,freq_Hz...]` rows; frequencies are converted to rad/s.
pub fn read_odmr_csv<R: BufRead>(reader: R) -> Result<OdmrDataset> {
    let records = read_rows(reader)?
        .into_iter()
        .map(|(lineno, v)| {
            if v.len() < 2 {
                return Err(Error::Parse { line: lineno, message: "need a field and at least one frequency".into() });
            }
            Ok(OdmrRecord { field: v[0], lines: v[1..].iter().map(|f| hz_to_rad(*f)).collect() })
        })
        .collect::<Result<Vec<_>>>()?;
    OdmrDataset::new(records)
}

/// `freq_Hz,value` rows; frequencies are converted to rad/s.
pub fn read_trace_csv<R: BufRead>(reader: R) -> Result<Vec<(f64, f64)>> {
    let rows = read_rows(reader)?;
    let mut out = Vec::with_capacity(rows.len());
    for (lineno, v) in rows {
        if v.len() != 2 {
            return Err(Error::Parse { line: lineno, message: format!("expected 2 columns, got {}", v.len()) });
        }
        if !(v[0].is_finite() && v[1].is_finite()) {
            return Err(Error::Parse { line: lineno, message: "non-finite value".into() });
        }
        out.push((hz_to_rad(v[0]), v[1]));
    }
    if out.is_empty() {
        return Err(Error::invalid("trace has no data rows"));
    }
    Ok(out)
}
