//! Parameter sweeps comparing the analytic models with simulation.

use std::fmt;
use std::str::FromStr;

use churncov_core::{
    coverage_rate, coverage_rate_limit, last_offline_closed_form, last_offline_split, last_online_closed_form,
    last_online_split, min_k_for_coverage, multisource_coverage, single_message_coverage, total_coverage,
    total_coverage_k, ChurnParams64, Form, SourceState, StreamModel,
};
use churncov_sim::{
    coverage_stats, mean_and_std_error, run_trial, SimConfig, SimResult, SourceChoice, DEFAULT_DISCARD,
};
use log::debug;
use rayon::prelude::*;

use crate::error::{HarnessError, Result};
use crate::params::Params;
use crate::table::{ComparisonRow, Tolerance};

/// Relative drain effect above which a note is attached.
pub const DRAIN_NOTE_THRESHOLD: f64 = 0.01;
/// Relative series/closed-form gap above which a note is attached.
pub const CLOSED_FORM_NOTE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    K,
    Lambda,
    Mu,
    NSources,
    /// Time since release of a single message.
    Time,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::K => "k",
            Self::Lambda => "lambda",
            Self::Mu => "mu",
            Self::NSources => "n_sources",
            Self::Time => "t",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Self::K | Self::NSources)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "alpha" => Self::Alpha,
            "k" => Self::K,
            "lambda" => Self::Lambda,
            "mu" => Self::Mu,
            "n_sources" | "n-sources" | "sources" => Self::NSources,
            "t" | "time" => Self::Time,
            _ => return Err(HarnessError::InvalidSweep(format!("unknown parameter {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Explicit(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        points: usize,
        scale: Scale,
    },
}

impl Grid {
    pub fn log(min: f64, max: f64, points: usize) -> Self {
        Self::Range {
            min,
            max,
            points,
            scale: Scale::Log,
        }
    }

    pub fn integers(range: std::ops::RangeInclusive<usize>) -> Self {
        Self::Explicit(range.map(|k| k as f64).collect())
    }

    /// Grid values; nonempty, finite and strictly increasing.
    pub fn values(&self) -> Result<Vec<f64>> {
        let bad = |m: String| Err(HarnessError::InvalidSweep(m));
        let v = match *self {
            Self::Explicit(ref v) => v.clone(),
            Self::Range {
                min,
                max,
                points,
                scale,
            } => {
                if points == 0 {
                    return bad("grid needs at least one point".into());
                }
                if points == 1 {
                    vec![min]
                } else {
                    if scale == Scale::Log && !(min > 0.0) {
                        return bad(format!("log grid needs a positive minimum, got {min}"));
                    }
                    let step = |i: usize| i as f64 / (points - 1) as f64;
                    (0..points)
                        .map(|i| match scale {
                            _ if i == 0 => min,
                            _ if i == points - 1 => max,
                            Scale::Linear => min + (max - min) * step(i),
                            Scale::Log => (min.ln() + (max.ln() - min.ln()) * step(i)).exp(),
                        })
                        .collect()
                }
            }
        };
        if v.is_empty() {
            return bad("grid is empty".into());
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("grid must be finite and strictly increasing: {v:?}"));
        }
        Ok(v)
    }
}

/// `min:max:points[:log|linear]` or a comma-separated list.
impl FromStr for Grid {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| HarnessError::InvalidSweep(format!("grid {s:?}: {m}"));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if !(3..=4).contains(&parts.len()) {
                return Err(bad("expected min:max:points[:scale]"));
            }
            let scale = match parts.get(3).copied().unwrap_or("linear") {
                "log" => Scale::Log,
                "linear" | "lin" => Scale::Linear,
                _ => return Err(bad("scale must be log or linear")),
            };
            Ok(Self::Range {
                min: parts[0].parse().map_err(|_| bad("bad minimum"))?,
                max: parts[1].parse().map_err(|_| bad("bad maximum"))?,
                points: parts[2].parse().map_err(|_| bad("bad point count"))?,
                scale,
            })
        } else {
            let v = s
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("bad number"))?;
            Ok(Self::Explicit(v))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    /// Normalized mean coverage of a single-source `k`-buffer stream.
    TotalCoverage,
    /// Extended coverage rate (theory only).
    CoverageRate,
    /// Large-`alpha` saturation of the mean-field coverage rate (theory only).
    RateLimit,
    /// Normalized mean coverage of online-generated messages, `n_sources` sources.
    MultisourceCoverage,
    /// Smallest buffer size reaching `target` normalized coverage (theory only).
    MinK { target: f64, model: StreamModel },
    /// Normalized coverage of one message released at time 0.
    SingleMessage { source: SourceState },
}

impl Quantity {
    fn simulable(self) -> bool {
        matches!(
            self,
            Self::TotalCoverage | Self::MultisourceCoverage | Self::SingleMessage { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Series name written to every row.
    pub label: String,
    pub param: SweepParam,
    pub grid: Grid,
    /// Values of the parameters that are not swept; `trials`, `messages` and
    /// `seed` (the seed base) configure the simulations.
    pub fixed: Params,
    pub quantity: Quantity,
    pub form: Form,
    pub simulate: bool,
    pub tolerance: Tolerance,
    /// Leading fraction of each trial's messages dropped as warm-up.
    pub discard: f64,
}

impl SweepSpec {
    pub fn new(label: impl Into<String>, param: SweepParam, grid: Grid, fixed: Params, quantity: Quantity) -> Self {
        Self {
            label: label.into(),
            param,
            grid,
            fixed,
            quantity,
            form: Form::FiniteN,
            simulate: quantity.simulable(),
            tolerance: Tolerance::default(),
            discard: DEFAULT_DISCARD,
        }
    }

    pub fn theory_only(mut self) -> Self {
        self.simulate = false;
        self
    }

    pub fn validate(&self) -> Result<Vec<f64>> {
        let bad = |m: String| Err(HarnessError::InvalidSweep(format!("{}: {m}", self.label)));
        let grid = self.grid.values()?;
        if self.param.is_integer() && grid.iter().any(|x| x.fract() != 0.0 || *x < 1.0) {
            return bad(format!("{} takes positive integers", self.param));
        }
        let is_time = self.param == SweepParam::Time;
        let is_single = matches!(self.quantity, Quantity::SingleMessage { .. });
        if is_time != is_single {
            return bad("time sweeps go with the single-message quantity only".into());
        }
        if self.param == SweepParam::K && matches!(self.quantity, Quantity::MinK { .. }) {
            return bad("min-k cannot sweep k".into());
        }
        if self.simulate && !self.quantity.simulable() {
            return bad(format!("{:?} has no simulation counterpart", self.quantity));
        }
        if self.simulate && self.fixed.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        Ok(grid)
    }

    /// Parameters at one grid point.
    pub fn at(&self, value: f64) -> Params {
        let mut p = self.fixed.clone();
        match self.param {
            SweepParam::Alpha => p.alpha = value,
            SweepParam::K => p.k = value as usize,
            SweepParam::Lambda => p.lambda = value,
            SweepParam::Mu => p.mu = value,
            SweepParam::NSources => p.n_sources = value as usize,
            SweepParam::Time => {}
        }
        p
    }

    fn annotate(&self, value: f64) -> impl Fn(HarnessError) -> HarnessError + '_ {
        move |e| HarnessError::AtPoint {
            series: self.label.clone(),
            param: self.param.name(),
            value,
            source: Box::new(e),
        }
    }
}

/// Seed of one trial: the seed base offset by grid point and trial index.
pub fn trial_seed(seed_base: u64, point: usize, trial: usize) -> u64 {
    seed_base.wrapping_add((point as u64) << 20).wrapping_add(trial as u64)
}

fn scale(churn: &ChurnParams64, form: Form) -> f64 {
    match form {
        Form::FiniteN => churn.n(),
        Form::MeanField => 1.0,
    }
}

/// Analytic value of `quantity` at `p`; `t` is the time for single-message curves.
pub fn theory(p: &Params, quantity: Quantity, form: Form, t: f64) -> Result<f64> {
    let churn = p.churn()?;
    Ok(match quantity {
        Quantity::TotalCoverage if p.k == 1 => total_coverage(p.alpha, &churn, form)?.total_normalized,
        Quantity::TotalCoverage => total_coverage_k(p.alpha, &churn, p.k, form)?.total_normalized,
        Quantity::CoverageRate if p.k == 1 => coverage_rate(p.alpha, &churn, form)?,
        Quantity::CoverageRate => total_coverage_k(p.alpha, &churn, p.k, form)?.rate,
        Quantity::RateLimit => coverage_rate_limit(&churn)?,
        Quantity::MultisourceCoverage => {
            multisource_coverage(p.alpha, &churn, p.k, p.n_sources, form)? / scale(&churn, form)
        }
        Quantity::MinK { target, model } => min_k_for_coverage(p.alpha, &churn, target, model, form)? as f64,
        Quantity::SingleMessage { source } => {
            single_message_coverage(t, &churn, source, form)?.value / scale(&churn, form)
        }
    })
}

/// Simulator configuration for a stream quantity.
pub fn stream_config(p: &Params, quantity: Quantity, seed: u64) -> Result<SimConfig> {
    let churn = p.churn()?;
    Ok(match quantity {
        Quantity::MultisourceCoverage => SimConfig::multi_source(churn, p.alpha, p.k, p.n_sources, p.messages, seed)?,
        _ => SimConfig::single_source(churn, p.alpha, p.k, p.messages, seed)?,
    })
}

/// Simulator configuration that follows one message released at time 0.
pub fn trajectory_config(p: &Params, source: SourceState, times: &[f64], seed: u64) -> Result<SimConfig> {
    let mut cfg = SimConfig::single_source(p.churn()?, p.alpha, 1, 1, seed)?;
    cfg.first_message_at_start = true;
    cfg.source_choice = match source {
        SourceState::Online => SourceChoice::Online,
        SourceState::Offline => SourceChoice::Offline,
        SourceState::Mixed => SourceChoice::Random,
    };
    cfg.sample_times = times.to_vec();
    cfg.drain_factor = 0.0;
    Ok(cfg)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<ComparisonRow>,
    pub notes: Vec<String>,
}

impl SweepOutcome {
    fn extend(&mut self, other: SweepOutcome) {
        self.rows.extend(other.rows);
        self.notes.extend(other.notes);
    }
}

struct PointSim {
    mean: f64,
    std_error: f64,
    drain: f64,
}

fn simulate_point(spec: &SweepSpec, p: &Params, point: usize) -> Result<PointSim> {
    let trials: Vec<(f64, f64)> = (0..p.trials)
        .into_par_iter()
        .map(|trial| -> Result<(f64, f64)> {
            let cfg = stream_config(p, spec.quantity, trial_seed(p.seed, point, trial))?;
            let result = run_trial(&cfg)?;
            let stats = coverage_stats(&result, spec.discard)?;
            Ok((stats.mean_normalized, result.drain_effect()))
        })
        .collect::<Result<_>>()?;
    let means: Vec<f64> = trials.iter().map(|t| t.0).collect();
    let (mean, std_error) = mean_and_std_error(&means);
    let drain = trials.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
    Ok(PointSim { mean, std_error, drain })
}

fn closed_form_note(spec: &SweepSpec, p: &Params) -> Result<Option<String>> {
    if p.k != 1 || !matches!(spec.quantity, Quantity::TotalCoverage | Quantity::CoverageRate) {
        return Ok(None);
    }
    let churn = p.churn()?;
    let on = last_online_split(p.alpha, &churn, Form::MeanField)?.total();
    let off = last_offline_split(p.alpha, &churn, Form::MeanField)?.total();
    let on_cf = last_online_closed_form(p.alpha, &churn);
    let off_cf = last_offline_closed_form(p.alpha, &churn);
    let gap = ((on - on_cf).abs() / on_cf.abs()).max((off - off_cf).abs() / off_cf.abs());
    Ok((gap > CLOSED_FORM_NOTE_THRESHOLD).then(|| {
        format!(
            "{} at alpha = {}: last-message series and closed forms differ by {gap:.2e} (relative)",
            spec.label, p.alpha
        )
    }))
}

fn run_point(spec: &SweepSpec, point: usize, value: f64) -> Result<SweepOutcome> {
    let p = spec.at(value);
    let mut out = SweepOutcome::default();
    let th = theory(&p, spec.quantity, spec.form, value)?;
    let mut row = ComparisonRow::theory_only(&spec.label, value, th);
    if spec.simulate {
        let sim = simulate_point(spec, &p, point)?;
        debug!(
            "{} {} = {}: theory {th}, sim {} +- {}",
            spec.label, spec.param, value, sim.mean, sim.std_error
        );
        row.sim = Some(spec.tolerance.judge(th, sim.mean, sim.std_error));
        if sim.drain > DRAIN_NOTE_THRESHOLD {
            out.notes.push(format!(
                "{} at {} = {value}: draining after the last message changed a trial mean by {:.1}%",
                spec.label,
                spec.param,
                100.0 * sim.drain
            ));
        }
    }
    out.notes.extend(closed_form_note(spec, &p)?);
    out.rows.push(row);
    Ok(out)
}

fn run_trajectory(spec: &SweepSpec, times: &[f64], source: SourceState) -> Result<SweepOutcome> {
    let p = &spec.fixed;
    let theory_rows = times
        .iter()
        .map(|&t| {
            let th = theory(p, spec.quantity, spec.form, t).map_err(spec.annotate(t))?;
            Ok(ComparisonRow::theory_only(&spec.label, t, th))
        })
        .collect::<Result<Vec<_>>>()?;
    if !spec.simulate {
        return Ok(SweepOutcome {
            rows: theory_rows,
            notes: Vec::new(),
        });
    }
    let runs: Vec<SimResult> = (0..p.trials)
        .into_par_iter()
        .map(|trial| -> Result<SimResult> {
            Ok(run_trial(&trajectory_config(
                p,
                source,
                times,
                trial_seed(p.seed, 0, trial),
            )?)?)
        })
        .collect::<Result<_>>()?;
    let n = p.n_peers as f64;
    let rows = theory_rows
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            let at_t: Vec<f64> = runs.iter().map(|r| r.trajectory[i].1 as f64 / n).collect();
            let (mean, se) = mean_and_std_error(&at_t);
            row.sim = Some(spec.tolerance.judge(row.theory, mean, se));
            row
        })
        .collect();
    Ok(SweepOutcome {
        rows,
        notes: Vec::new(),
    })
}

/// Evaluates one sweep; rows follow the grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome> {
    run_sweeps(std::slice::from_ref(spec))
}

/// Evaluates several sweeps concurrently; rows keep the input order.
pub fn run_sweeps(specs: &[SweepSpec]) -> Result<SweepOutcome> {
    let mut jobs = Vec::new();
    for (s, spec) in specs.iter().enumerate() {
        let grid = spec.validate()?;
        if let Quantity::SingleMessage { source } = spec.quantity {
            jobs.push((s, Job::Trajectory(grid, source)));
        } else {
            jobs.extend(grid.into_iter().enumerate().map(|(i, v)| (s, Job::Point(i, v))));
        }
    }
    let parts: Vec<SweepOutcome> = jobs
        .into_par_iter()
        .map(|(s, job)| {
            let spec = &specs[s];
            match job {
                Job::Point(i, v) => run_point(spec, i, v).map_err(spec.annotate(v)),
                Job::Trajectory(times, source) => run_trajectory(spec, &times, source),
            }
        })
        .collect::<Result<_>>()?;
    let mut out = SweepOutcome::default();
    for p in parts {
        out.extend(p);
    }
    Ok(out)
}

enum Job {
    Point(usize, f64),
    Trajectory(Vec<f64>, SourceState),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        let g: Grid = "0.1:100:4:log".parse().unwrap();
        let v = g.values().unwrap();
        assert_eq!(v.len(), 4);
        assert!(v[0] == 0.1 && v[3] == 100.0 && (v[1] - 1.0).abs() < 1e-12);
        let g: Grid = "1,2,5".parse().unwrap();
        assert_eq!(g.values().unwrap(), vec![1.0, 2.0, 5.0]);
        assert!("3,2".parse::<Grid>().unwrap().values().is_err());
        assert!(Grid::Explicit(vec![]).values().is_err());
        assert!("0:1:3:log".parse::<Grid>().unwrap().values().is_err());
    }

    #[test]
    fn incompatible_specs_are_refused() {
        let p = Params::default();
        let k_min = Quantity::MinK {
            target: 0.8,
            model: StreamModel::SingleSource,
        };
        assert!(
            SweepSpec::new("a", SweepParam::K, Grid::integers(1..=3), p.clone(), k_min)
                .validate()
                .is_err()
        );
        let t = SweepSpec::new(
            "b",
            SweepParam::Time,
            Grid::log(0.1, 1.0, 3),
            p.clone(),
            Quantity::TotalCoverage,
        );
        assert!(t.validate().is_err());
        let frac = SweepSpec::new(
            "c",
            SweepParam::K,
            Grid::Explicit(vec![1.5]),
            p,
            Quantity::TotalCoverage,
        );
        assert!(frac.validate().is_err());
    }

    #[test]
    fn errors_name_the_grid_point() {
        let p = Params {
            n_peers: 10,
            ..Params::default()
        };
        let spec = SweepSpec::new(
            "ms",
            SweepParam::NSources,
            Grid::Explicit(vec![20.0]),
            p,
            Quantity::MultisourceCoverage,
        )
        .theory_only();
        let e = run_sweep(&spec).unwrap_err().to_string();
        assert!(e.contains("ms at n_sources = 20"), "{e}");
    }
}
