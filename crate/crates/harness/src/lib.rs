//! Experiment runner for the churn coverage models: parameter sweeps that set
//! analytic values beside simulation estimates, CSV output and pass/fail
//! reports.

// NaN must fail parameter checks, hence the negated comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod params;
pub mod presets;
pub mod report;
pub mod sweep;
pub mod table;

pub use error::{HarnessError, Result};
pub use params::{Overrides, Params};
pub use presets::{preset, PRESETS};
pub use report::{compare_report, Report};
pub use sweep::{
    run_sweep, run_sweeps, theory, trial_seed, Grid, Quantity, Scale, SweepOutcome, SweepParam, SweepSpec,
};
pub use table::{emit_csv, parse_csv_file, read_csv, to_csv_string, write_csv, ComparisonRow, SimEstimate, Tolerance};
