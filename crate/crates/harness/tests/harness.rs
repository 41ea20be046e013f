use std::path::Path;
use std::process::Command;

use churncov::{
    compare_report, emit_csv, parse_csv_file, run_sweep, run_sweeps, ComparisonRow, Grid, HarnessError, Params,
    Quantity, SimEstimate, SweepParam, SweepSpec, Tolerance,
};
use churncov_core::{min_k_for_coverage, total_coverage, ChurnParams64, Form, StreamModel};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_churncov"))
}

fn compared(series: &str, param: f64, theory: f64, mean: f64, se: f64) -> ComparisonRow {
    ComparisonRow {
        series: series.into(),
        param,
        theory,
        sim: Some(Tolerance::default().judge(theory, mean, se)),
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE)
    ]
}

fn row() -> impl Strategy<Value = ComparisonRow> {
    let sim = proptest::option::of((finite(), finite(), finite(), finite(), any::<bool>()).prop_map(
        |(mean, std_error, abs_dev, rel_dev, pass)| SimEstimate {
            mean,
            std_error,
            abs_dev,
            rel_dev,
            pass,
        },
    ));
    ("[a-z=, \"0-9.]{1,12}", finite(), finite(), sim).prop_map(|(series, param, theory, sim)| ComparisonRow {
        series,
        param,
        theory,
        sim,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn csv_round_trip(rows in proptest::collection::vec(row(), 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        emit_csv(&rows, &path).unwrap();
        prop_assert_eq!(parse_csv_file(&path).unwrap(), rows);
    }
}

#[test]
fn empty_rows_are_not_written() {
    let dir = tempfile::tempdir().unwrap();
    let e = emit_csv(&[], &dir.path().join("x.csv")).unwrap_err();
    assert!(matches!(e, HarnessError::EmptyReport));
}

fn spec(grid: Vec<f64>, seed: u64) -> SweepSpec {
    SweepSpec::new(
        "s",
        SweepParam::Alpha,
        Grid::Explicit(grid),
        Params {
            trials: 1,
            messages: 300,
            seed,
            ..Params::default()
        },
        Quantity::TotalCoverage,
    )
}

#[test]
fn reruns_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = dir.path().join(format!("{i}.csv"));
            emit_csv(&run_sweep(&spec(vec![1.0], 42)).unwrap().rows, &path).unwrap();
            std::fs::read(path).unwrap()
        })
        .collect();
    assert_eq!(files[0], files[1]);
    assert_eq!(String::from_utf8_lossy(&files[0]).lines().count(), 2);
    let other = run_sweep(&spec(vec![1.0], 43)).unwrap().rows;
    let first = churncov::read_csv(files[0].as_slice()).unwrap();
    assert_ne!(first[0].sim, other[0].sim);
}

#[test]
fn rows_follow_grid_and_spec_order() {
    let mut a = spec(vec![0.3, 1.0, 3.0, 10.0], 1).theory_only();
    a.label = "a".into();
    let mut b = spec(vec![0.5, 5.0], 1).theory_only();
    b.label = "b".into();
    let rows = run_sweeps(&[a, b]).unwrap().rows;
    let got: Vec<(String, f64)> = rows.iter().map(|r| (r.series.clone(), r.param)).collect();
    let want = [("a", 0.3), ("a", 1.0), ("a", 3.0), ("a", 10.0), ("b", 0.5), ("b", 5.0)];
    assert_eq!(got, want.map(|(s, p)| (s.to_string(), p)));
    let c = ChurnParams64::new(100, 1.0, 1.0).unwrap();
    assert_eq!(
        rows[1].theory,
        total_coverage(1.0, &c, Form::FiniteN).unwrap().total_normalized
    );
}

#[test]
fn report_outcomes() {
    let ok = vec![
        compared("x", 1.0, 0.5, 0.51, 0.01),
        ComparisonRow::theory_only("t", 1.0, 2.0),
    ];
    let r = compare_report(&ok, &[]).unwrap();
    assert_eq!(r.exit_code(), 0);
    assert!(r.to_string().contains("0 failures"));

    let mut bad = ok.clone();
    bad.push(compared("lambda=2", 31.5, 0.5, 0.7, 0.01));
    let r = compare_report(&bad, &["checked".into()]).unwrap();
    assert_eq!(r.exit_code(), 1);
    let text = r.to_string();
    assert!(text.contains("FAIL lambda=2 at 31.5"), "{text}");
    assert!(text.contains("note: checked"));

    assert!(matches!(compare_report(&[], &[]), Err(HarnessError::EmptyReport)));
}

fn write_rows(dir: &Path, rows: &[ComparisonRow]) -> std::path::PathBuf {
    let path = dir.join("in.csv");
    emit_csv(rows, &path).unwrap();
    path
}

#[test]
fn compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![
        compared("good", 1.0, 0.5, 0.5, 0.01),
        compared("bad", 2.0, 0.5, 0.9, 0.01),
    ];
    let path = write_rows(dir.path(), &rows);
    let status = |extra: &[&str]| {
        bin()
            .arg("compare")
            .arg("--input")
            .arg(&path)
            .args(extra)
            .output()
            .unwrap()
    };
    assert_eq!(status(&["--series", "good"]).status.code(), Some(0));
    let out = status(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL bad at 2"));
    let empty = status(&["--series", "none"]);
    assert_eq!(empty.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&empty.stderr).contains("no rows"));
    assert_eq!(
        bin().arg("sweep").arg("--bogus").output().unwrap().status.code(),
        Some(2)
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# defaults\nlambda = 2\nn-peers = 40\nalpha = 3\n").unwrap();
    let out = bin()
        .args(["analytic", "--config"])
        .arg(&cfg)
        .args(["--lambda", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("N = 40, lambda = 0.5, mu = 1, alpha = 3"), "{text}");
}

#[test]
fn cli_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bestk.csv");
    let out = bin()
        .args(["min-k", "--target", "0.8", "--grid", "1,5", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let rows = parse_csv_file(&path).unwrap();
    let c = ChurnParams64::new(100, 1.0, 1.0).unwrap();
    let want: Vec<f64> = [1.0, 5.0]
        .iter()
        .map(|&a| min_k_for_coverage(a, &c, 0.8, StreamModel::SingleSource, Form::MeanField).unwrap() as f64)
        .collect();
    assert_eq!(rows.iter().map(|r| r.theory).collect::<Vec<_>>(), want);

    let path = dir.path().join("k.csv");
    let out = bin()
        .args(["sweep", "--param", "k", "--grid", "1,2,3", "--theory-only", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let ks: Vec<f64> = parse_csv_file(&path).unwrap().iter().map(|r| r.theory).collect();
    assert!(ks.windows(2).all(|w| w[0] < w[1]), "{ks:?}");
}
