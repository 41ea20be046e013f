use std::fmt;

use crate::error::{HarnessError, Result};
use crate::table::ComparisonRow;

/// Outcome of a set of comparison rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: usize,
    pub compared: usize,
    pub failures: Vec<ComparisonRow>,
    /// Compared row with the largest absolute deviation.
    pub worst: Option<ComparisonRow>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Process exit status: 0 when every compared row passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

pub fn compare_report(rows: &[ComparisonRow], notes: &[String]) -> Result<Report> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let compared: Vec<&ComparisonRow> = rows.iter().filter(|r| r.sim.is_some()).collect();
    let worst = compared
        .iter()
        .max_by(|a, b| a.sim.unwrap().abs_dev.total_cmp(&b.sim.unwrap().abs_dev))
        .map(|r| (*r).clone());
    Ok(Report {
        rows: rows.len(),
        compared: compared.len(),
        failures: rows.iter().filter(|r| r.failed()).cloned().collect(),
        worst,
        notes: notes.to_vec(),
    })
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} rows, {} compared with simulation, {} failures",
            self.rows,
            self.compared,
            self.failures.len()
        )?;
        if let Some(w) = &self.worst {
            let s = w.sim.unwrap();
            writeln!(
                f,
                "worst deviation: {:.4} ({} at {}: theory {:.4}, sim {:.4} +- {:.4})",
                s.abs_dev, w.series, w.param, w.theory, s.mean, s.std_error
            )?;
        }
        for r in &self.failures {
            let s = r.sim.unwrap();
            writeln!(
                f,
                "FAIL {} at {}: theory {:.4}, sim {:.4} +- {:.4}, deviation {:.4}",
                r.series, r.param, r.theory, s.mean, s.std_error, s.abs_dev
            )?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}
