//! Comparison rows and their CSV form.
//!
//! Columns, in order: `series, param, theory, sim_mean, sim_se, abs_dev,
//! rel_dev, pass`. Numbers are written in scientific notation with 17
//! significant digits, which round-trips every `f64`; fields without a
//! simulation are left empty.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{HarnessError, Result};

pub const HEADER: [&str; 8] = [
    "series", "param", "theory", "sim_mean", "sim_se", "abs_dev", "rel_dev", "pass",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub series: String,
    pub param: f64,
    pub theory: f64,
    pub sim: Option<SimEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
    pub pass: bool,
}

/// Acceptance rule for a theory/simulation pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub z: f64,
    /// Theory below the simulation passes regardless of the gap.
    pub undershoot_ok: bool,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 0.05,
            z: 3.0,
            undershoot_ok: false,
        }
    }
}

impl Tolerance {
    pub fn judge(&self, theory: f64, mean: f64, std_error: f64) -> SimEstimate {
        let abs_dev = (theory - mean).abs();
        let rel_dev = if mean != 0.0 { abs_dev / mean.abs() } else { abs_dev };
        let pass = abs_dev <= self.abs_tol.max(self.z * std_error) || (self.undershoot_ok && theory <= mean);
        SimEstimate {
            mean,
            std_error,
            abs_dev,
            rel_dev,
            pass,
        }
    }
}

impl ComparisonRow {
    pub fn theory_only(series: impl Into<String>, param: f64, theory: f64) -> Self {
        Self {
            series: series.into(),
            param,
            theory,
            sim: None,
        }
    }

    pub fn failed(&self) -> bool {
        matches!(self.sim, Some(s) if !s.pass)
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(rows: &[ComparisonRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        let mut rec = vec![r.series.clone(), num(r.param), num(r.theory)];
        match r.sim {
            Some(s) => rec.extend([
                num(s.mean),
                num(s.std_error),
                num(s.abs_dev),
                num(s.rel_dev),
                s.pass.to_string(),
            ]),
            None => rec.extend(std::iter::repeat_n(String::new(), 5)),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the rows to `path`; an empty row set is refused.
pub fn emit_csv(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let file = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub fn to_csv_string(rows: &[ComparisonRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ComparisonRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(HEADER) {
        return Err(HarnessError::CsvFormat {
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| HarnessError::CsvFormat { line, message };
        let float = |i: usize| -> Result<f64> { rec[i].parse().map_err(|e| bad(format!("{}: {e}", HEADER[i]))) };
        let sim = if rec[3].is_empty() {
            None
        } else {
            let pass = rec[7].parse().map_err(|e| bad(format!("pass: {e}")))?;
            Some(SimEstimate {
                mean: float(3)?,
                std_error: float(4)?,
                abs_dev: float(5)?,
                rel_dev: float(6)?,
                pass,
            })
        };
        rows.push(ComparisonRow {
            series: rec[0].to_string(),
            param: float(1)?,
            theory: float(2)?,
            sim,
        });
    }
    Ok(rows)
}

pub fn parse_csv_file(path: &Path) -> Result<Vec<ComparisonRow>> {
    read_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_is_two_lines() {
        let rows = vec![ComparisonRow::theory_only("a", 0.5, 1.0 / 3.0)];
        let s = to_csv_string(&rows).unwrap();
        assert_eq!(s.lines().count(), 2);
        assert_eq!(
            s.lines().nth(1).unwrap(),
            "a,5.0000000000000000e-1,3.3333333333333331e-1,,,,,"
        );
    }

    #[test]
    fn tolerance_rule() {
        let t = Tolerance::default();
        assert!(t.judge(0.5, 0.54, 0.001).pass);
        assert!(!t.judge(0.5, 0.56, 0.001).pass);
        assert!(t.judge(0.5, 0.56, 0.03).pass);
        let one_sided = Tolerance {
            undershoot_ok: true,
            ..t
        };
        assert!(one_sided.judge(0.5, 0.7, 0.001).pass);
        assert!(!one_sided.judge(0.7, 0.5, 0.001).pass);
    }
}
