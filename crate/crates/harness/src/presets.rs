//! Built-in named sweeps, one set per plot of coverage against a swept parameter.

use churncov_core::{Form, SourceState, StreamModel};

use crate::error::{HarnessError, Result};
use crate::params::Params;
use crate::sweep::{Grid, Quantity, SweepParam, SweepSpec};
use crate::table::Tolerance;

pub const PRESETS: [&str; 10] = [
    "chart1", "chart2", "chart3", "chart4", "k_buf", "3_buf", "lambda", "testk1", "kbuftest", "bestk",
];

const LAMBDAS: [f64; 3] = [0.5, 1.0, 2.0];

fn stream_params(lambda: f64) -> Params {
    Params {
        lambda,
        mu: 1.0,
        n_peers: 100,
        k: 1,
        messages: 1000,
        trials: 10,
        ..Params::default()
    }
}

fn alpha_grid() -> Grid {
    Grid::log(0.1, 100.0, 13)
}

fn per_lambda(quantity: Quantity, param: SweepParam, grid: Grid, fixed: impl Fn(f64) -> Params) -> Vec<SweepSpec> {
    LAMBDAS
        .iter()
        .map(|&l| SweepSpec::new(format!("lambda={l}"), param, grid.clone(), fixed(l), quantity))
        .collect()
}

fn rate_curves(mu: f64) -> Vec<SweepSpec> {
    let grid = Grid::log(0.01, 1e4, 25);
    let mut specs = Vec::new();
    for &l in &LAMBDAS {
        let fixed = Params {
            lambda: l,
            mu,
            ..stream_params(l)
        };
        for (label, q) in [("rate", Quantity::CoverageRate), ("limit", Quantity::RateLimit)] {
            let mut s = SweepSpec::new(
                format!("{label} lambda={l}"),
                SweepParam::Alpha,
                grid.clone(),
                fixed.clone(),
                q,
            );
            s.form = Form::MeanField;
            specs.push(s);
        }
    }
    specs
}

fn multisource(lambda: f64) -> Params {
    Params {
        n_sources: 100,
        ..stream_params(lambda)
    }
}

fn one_sided_low_lambda(mut specs: Vec<SweepSpec>) -> Vec<SweepSpec> {
    for s in &mut specs {
        if s.fixed.lambda < 1.0 {
            s.tolerance = Tolerance {
                undershoot_ok: true,
                ..s.tolerance
            };
        }
    }
    specs
}

/// Named sweep set. Series within a preset get disjoint seed bases.
pub fn preset(name: &str) -> Result<Vec<SweepSpec>> {
    let mut specs = match name {
        "chart1" => {
            let fixed = Params {
                n_peers: 1000,
                trials: 10,
                ..Params::default()
            };
            let grid = Grid::Explicit(vec![0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0]);
            [
                ("source_online", SourceState::Online),
                ("source_random", SourceState::Mixed),
            ]
            .into_iter()
            .map(|(label, source)| {
                let mut s = SweepSpec::new(
                    label,
                    SweepParam::Time,
                    grid.clone(),
                    fixed.clone(),
                    Quantity::SingleMessage { source },
                );
                s.tolerance = Tolerance {
                    abs_tol: 0.0,
                    ..Tolerance::default()
                };
                s
            })
            .collect()
        }
        "chart2" => per_lambda(Quantity::TotalCoverage, SweepParam::Alpha, alpha_grid(), stream_params),
        "chart3" => rate_curves(1.0),
        "chart4" => rate_curves(100.0),
        "k_buf" => [1, 2, 3, 5]
            .into_iter()
            .map(|k| {
                let fixed = Params {
                    k,
                    ..stream_params(1.0)
                };
                SweepSpec::new(
                    format!("k={k}"),
                    SweepParam::Alpha,
                    alpha_grid(),
                    fixed,
                    Quantity::TotalCoverage,
                )
                .theory_only()
            })
            .collect(),
        "3_buf" => per_lambda(Quantity::TotalCoverage, SweepParam::Alpha, alpha_grid(), |l| Params {
            k: 3,
            ..stream_params(l)
        }),
        "lambda" => per_lambda(Quantity::TotalCoverage, SweepParam::K, Grid::integers(1..=10), |l| {
            Params {
                alpha: 1.0,
                ..stream_params(l)
            }
        })
        .into_iter()
        .map(SweepSpec::theory_only)
        .collect(),
        "testk1" => one_sided_low_lambda(per_lambda(
            Quantity::MultisourceCoverage,
            SweepParam::Alpha,
            alpha_grid(),
            multisource,
        )),
        "kbuftest" => one_sided_low_lambda(per_lambda(
            Quantity::MultisourceCoverage,
            SweepParam::K,
            Grid::integers(1..=20),
            |l| Params {
                alpha: 10.0,
                ..multisource(l)
            },
        )),
        "bestk" => [0.8, 0.9]
            .into_iter()
            .map(|target| {
                let q = Quantity::MinK {
                    target,
                    model: StreamModel::SingleSource,
                };
                let mut s = SweepSpec::new(
                    format!("target={target}"),
                    SweepParam::Alpha,
                    Grid::log(0.5, 50.0, 11),
                    stream_params(1.0),
                    q,
                );
                s.form = Form::MeanField;
                s
            })
            .collect(),
        _ => return Err(HarnessError::UnknownPreset(name.to_string())),
    };
    for (i, s) in specs.iter_mut().enumerate() {
        s.fixed.seed = s.fixed.seed.wrapping_add((i as u64) << 40);
    }
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for name in PRESETS {
            let specs = preset(name).unwrap();
            assert!(!specs.is_empty());
            for s in &specs {
                s.validate().unwrap();
            }
        }
        assert!(preset("chart9").is_err());
    }
}
