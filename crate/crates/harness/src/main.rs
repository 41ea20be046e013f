use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use churncov::sweep::stream_config;
use churncov::{
    compare_report, emit_csv, parse_csv_file, preset, run_sweeps, ComparisonRow, Grid, Overrides, Params, Quantity,
    SweepOutcome, SweepParam, SweepSpec, Tolerance, PRESETS,
};
use churncov_core::{
    coverage_rate_limit, equilibrium, fractions_k, min_k_for_coverage, multisource_coverage, total_coverage_k, Form,
    StreamModel,
};
use churncov_sim::{coverage_stats, run_trial, write_trace};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "churncov",
    version,
    about = "Message coverage under peer churn: analytic models and simulation"
)]
struct Cli {
    /// File of `key = value` defaults for the shared flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Shared {
    /// Offline-to-online rate.
    #[arg(long)]
    lambda: Option<f64>,
    /// Online-to-offline rate.
    #[arg(long)]
    mu: Option<f64>,
    /// Message generation rate.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    n_peers: Option<usize>,
    /// Buffer size.
    #[arg(long)]
    k: Option<usize>,
    /// Number of source peers (more than one selects the multi-source model).
    #[arg(long)]
    sources: Option<usize>,
    /// Messages per simulation trial.
    #[arg(long)]
    messages: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Shared {
    fn overrides(&self) -> Overrides {
        Overrides {
            lambda: self.lambda,
            mu: self.mu,
            alpha: self.alpha,
            n_peers: self.n_peers,
            k: self.k,
            n_sources: self.sources,
            messages: self.messages,
            trials: self.trials,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Finite,
    MeanField,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Finite => Form::FiniteN,
            FormArg::MeanField => Form::MeanField,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityArg {
    Total,
    Rate,
    Multisource,
    MinK,
}

#[derive(Subcommand)]
enum Command {
    /// Print the analytic coverage model for one parameter set.
    Analytic {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, value_enum, default_value = "finite")]
        form: FormArg,
    },
    /// Run simulation trials and compare them with the model.
    Simulate {
        #[command(flatten)]
        shared: Shared,
        /// Write the event trace of the first trial here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Check the online-buffer identity after every event.
        #[arg(long)]
        debug_checks: bool,
        /// Leading fraction of messages dropped as warm-up.
        #[arg(long, default_value_t = churncov_sim::DEFAULT_DISCARD)]
        discard: f64,
    },
    /// Run a named preset or a custom parameter sweep.
    Sweep {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, conflicts_with_all = ["param", "grid"])]
        preset: Option<String>,
        /// alpha, k, lambda, mu or n_sources.
        #[arg(long, requires = "grid")]
        param: Option<String>,
        /// `min:max:points[:log|linear]` or a comma-separated list.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, value_enum, default_value = "total")]
        quantity: QuantityArg,
        /// Target normalized coverage for `--quantity min-k`.
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, value_enum, default_value = "finite")]
        form: FormArg,
        /// Skip the simulations.
        #[arg(long)]
        theory_only: bool,
        #[arg(long, default_value_t = 0.05)]
        abs_tol: f64,
        #[arg(long, default_value_t = 3.0)]
        z: f64,
        /// List the presets and exit.
        #[arg(long)]
        list: bool,
    },
    /// Summarize a comparison CSV; exit status 1 if any row fails.
    Compare {
        #[arg(long)]
        input: PathBuf,
        /// Keep only this series.
        #[arg(long)]
        series: Option<String>,
    },
    /// Smallest buffer size reaching the target coverage.
    MinK {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, required = true, num_args = 1..)]
        target: Vec<f64>,
        /// Alpha values to scan instead of `--alpha`.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, value_enum, default_value = "mean-field")]
        form: FormArg,
    },
}

fn resolve(cli_config: &Option<PathBuf>, shared: &Shared) -> anyhow::Result<(Params, Overrides)> {
    let file = match cli_config {
        Some(path) => Overrides::read_config(path).with_context(|| format!("reading {}", path.display()))?,
        None => Overrides::default(),
    };
    let merged = shared.overrides().over(file);
    Ok((merged.apply(Params::default()), merged))
}

fn write_rows(rows: &[ComparisonRow], out: &Option<PathBuf>) -> anyhow::Result<()> {
    if let Some(path) = out {
        emit_csv(rows, path).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {} rows to {}", rows.len(), path.display());
    }
    Ok(())
}

fn finish(outcome: &SweepOutcome, out: &Option<PathBuf>) -> anyhow::Result<i32> {
    write_rows(&outcome.rows, out)?;
    let report = compare_report(&outcome.rows, &outcome.notes)?;
    print!("{report}");
    Ok(report.exit_code())
}

fn analytic(p: &Params, form: Form) -> anyhow::Result<i32> {
    let churn = p.churn()?;
    let eq = equilibrium(&churn)?;
    println!(
        "N = {}, lambda = {}, mu = {}, alpha = {}, k = {}",
        p.n_peers, p.lambda, p.mu, p.alpha, p.k
    );
    println!("online at equilibrium: {:.6} of {}", eq.n_online, p.n_peers);
    let rep = total_coverage_k(p.alpha, &churn, p.k, form)?;
    let fr = fractions_k(p.alpha, &churn, p.k)?;
    println!("{:<8} {:>14} {:>14}", "category", "fraction", "coverage");
    for (cat, c) in &rep.per_category {
        println!(
            "{:<8} {:>14.8} {:>14.6}",
            cat.to_string(),
            fr.get(*cat).unwrap_or(f64::NAN),
            c
        );
    }
    println!(
        "mean coverage      {:.8} ({:.8} normalized)",
        rep.total, rep.total_normalized
    );
    println!(
        "base coverage      {:.8} ({:.8} normalized)",
        rep.base, rep.base_normalized
    );
    println!("coverage rate      {:.8}", rep.rate);
    println!("rate saturation    {:.8}", coverage_rate_limit(&churn)?);
    if p.n_sources > 1 {
        let m = multisource_coverage(p.alpha, &churn, p.k, p.n_sources, form)?;
        println!("multi-source ({} sources) coverage {:.8}", p.n_sources, m);
    }
    Ok(0)
}

fn simulate(
    p: &Params,
    out: &Option<PathBuf>,
    trace: &Option<PathBuf>,
    debug: bool,
    discard: f64,
) -> anyhow::Result<i32> {
    let quantity = if p.n_sources > 1 {
        Quantity::MultisourceCoverage
    } else {
        Quantity::TotalCoverage
    };
    if let Some(path) = trace {
        let mut cfg = stream_config(p, quantity, churncov::trial_seed(p.seed, 0, 0))?;
        cfg.trace = true;
        let r = run_trial(&cfg)?;
        write_trace(&r.trace, BufWriter::new(File::create(path)?))?;
        log::info!("wrote {} trace records to {}", r.trace.len(), path.display());
    }
    let mut spec = SweepSpec::new(
        "simulate",
        SweepParam::Alpha,
        Grid::Explicit(vec![p.alpha]),
        p.clone(),
        quantity,
    );
    spec.discard = discard;
    if debug {
        for trial in 0..p.trials {
            let mut cfg = stream_config(p, quantity, churncov::trial_seed(p.seed, 0, trial))?;
            cfg.debug_checks = true;
            let r = run_trial(&cfg)?;
            let s = coverage_stats(&r, discard)?;
            println!(
                "trial {trial}: {} events, mean {:.4} +- {:.4}",
                r.event_count,
                s.mean_normalized,
                s.std_error / p.n_peers as f64
            );
        }
    }
    finish(&run_sweeps(&[spec])?, out)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    p: Params,
    given: &Overrides,
    out: &Option<PathBuf>,
    name: Option<String>,
    param: Option<String>,
    grid: Option<String>,
    quantity: QuantityArg,
    target: Option<f64>,
    form: Form,
    theory_only: bool,
    tolerance: Tolerance,
) -> anyhow::Result<i32> {
    let mut specs = if let Some(name) = name {
        let mut specs = preset(&name)?;
        for s in &mut specs {
            s.fixed.trials = given.trials.unwrap_or(s.fixed.trials);
            s.fixed.messages = given.messages.unwrap_or(s.fixed.messages);
            s.fixed.seed = s.fixed.seed.wrapping_add(given.seed.unwrap_or(0));
        }
        specs
    } else {
        let (Some(param), Some(grid)) = (param, grid) else {
            bail!("give --preset or both --param and --grid");
        };
        let model = if p.n_sources > 1 {
            StreamModel::MultiSource { n_sources: p.n_sources }
        } else {
            StreamModel::SingleSource
        };
        let q = match quantity {
            QuantityArg::Total => Quantity::TotalCoverage,
            QuantityArg::Rate => Quantity::CoverageRate,
            QuantityArg::Multisource => Quantity::MultisourceCoverage,
            QuantityArg::MinK => Quantity::MinK {
                target: target.context("--quantity min-k needs --target")?,
                model,
            },
        };
        let mut s = SweepSpec::new("sweep", param.parse()?, grid.parse()?, p, q);
        s.form = form;
        s.tolerance = tolerance;
        vec![s]
    };
    if theory_only {
        specs = specs.into_iter().map(SweepSpec::theory_only).collect();
    }
    finish(&run_sweeps(&specs)?, out)
}

fn compare(input: &Path, series: &Option<String>) -> anyhow::Result<i32> {
    let mut rows = parse_csv_file(input).with_context(|| format!("reading {}", input.display()))?;
    if let Some(s) = series {
        rows.retain(|r| &r.series == s);
    }
    let report = compare_report(&rows, &[])?;
    print!("{report}");
    Ok(report.exit_code())
}

fn min_k(p: &Params, out: &Option<PathBuf>, targets: &[f64], grid: &Option<String>, form: Form) -> anyhow::Result<i32> {
    let churn = p.churn()?;
    let alphas = match grid {
        Some(g) => g.parse::<Grid>()?.values()?,
        None => vec![p.alpha],
    };
    let model = if p.n_sources > 1 {
        StreamModel::MultiSource { n_sources: p.n_sources }
    } else {
        StreamModel::SingleSource
    };
    let mut rows = Vec::new();
    println!("{:>12} {:>8} {:>6}", "alpha", "target", "k");
    for &target in targets {
        for &alpha in &alphas {
            let k = min_k_for_coverage(alpha, &churn, target, model, form)?;
            println!("{alpha:>12.6} {target:>8} {k:>6}");
            rows.push(ComparisonRow::theory_only(format!("target={target}"), alpha, k as f64));
        }
    }
    write_rows(&rows, out)?;
    Ok(0)
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Analytic { shared, form } => {
            let (p, _) = resolve(&cli.config, &shared)?;
            analytic(&p, form.into())
        }
        Command::Simulate {
            shared,
            trace,
            debug_checks,
            discard,
        } => {
            let (p, o) = resolve(&cli.config, &shared)?;
            simulate(&p, &o.out, &trace, debug_checks, discard)
        }
        Command::Sweep {
            shared,
            preset,
            param,
            grid,
            quantity,
            target,
            form,
            theory_only,
            abs_tol,
            z,
            list,
        } => {
            if list {
                for name in PRESETS {
                    println!("{name}");
                }
                return Ok(0);
            }
            let (p, o) = resolve(&cli.config, &shared)?;
            let tolerance = Tolerance {
                abs_tol,
                z,
                undershoot_ok: false,
            };
            sweep(
                p,
                &o,
                &o.out,
                preset,
                param,
                grid,
                quantity,
                target,
                form.into(),
                theory_only,
                tolerance,
            )
        }
        Command::Compare { input, series } => compare(&input, &series),
        Command::MinK {
            shared,
            target,
            grid,
            form,
        } => {
            let (p, o) = resolve(&cli.config, &shared)?;
            min_k(&p, &o.out, &target, &grid, form.into())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
