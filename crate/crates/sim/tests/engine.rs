use std::collections::{BTreeSet, HashSet};

use churncov_core::*;
use churncov_sim::*;
use proptest::prelude::*;

fn churn(n: usize, l: f64, m: f64) -> ChurnParams64 {
    ChurnParams64::new(n, l, m).unwrap()
}

fn ids() -> impl Strategy<Value = Vec<u64>> {
    proptest::collection::vec(0u64..60, 0..12)
}

proptest! {
    #[test]
    fn merge_keeps_newest_of_union(a in ids(), b in ids(), k in 1usize..8) {
        let (ba, bb) = (Buffer::from_ids(a.clone(), k), Buffer::from_ids(b.clone(), k));
        let m = merge_buffers(&ba, &bb, k);
        let union: BTreeSet<u64> = ba.ids().iter().chain(bb.ids()).copied().collect();
        let want: Vec<u64> = union.iter().rev().take(k).rev().copied().collect();
        prop_assert_eq!(m.ids(), &want[..]);
        prop_assert_eq!(&merge_buffers(&bb, &ba, k), &m);
        prop_assert_eq!(&merge_buffers(&ba, &ba, k), &ba);
        prop_assert!(m.ids().windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn exponential_moments() {
    for (rate, stream) in [(1.0, 1u64), (4.0, 2)] {
        let mut rng = init_stream(stream);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| sample_exponential(rate, &mut rng).unwrap())
            .collect();
        assert!(draws.iter().all(|&x| x > 0.0));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((mean * rate - 1.0).abs() < 0.01, "mean {mean}");
        assert!((var * rate * rate - 1.0).abs() < 0.03, "variance {var}");
    }
}

#[test]
fn permanent_peers_see_everything() {
    let cfg = SimConfig::single_source(churn(50, 1.0, 1e-9), 1.0, 1, 100, 3).unwrap();
    let r = run_trial(&cfg).unwrap();
    assert_eq!(r.per_message_coverage(), vec![50; 100]);
    let s = coverage_stats(&r, 0.0).unwrap();
    assert_eq!((s.mean, s.std_error), (50.0, 0.0));
}

#[test]
fn unfiltered_stats_match_result_mean() {
    let r = run_trial(&SimConfig::single_source(churn(40, 1.0, 1.0), 2.0, 1, 500, 5).unwrap()).unwrap();
    let s = coverage_stats(&r, 0.0).unwrap();
    assert!((s.mean - r.mean_coverage).abs() < 1e-12);
    assert_eq!(s.count, 500);
    assert!(s.std_error > 0.0);
    assert_eq!(coverage_stats(&r, 0.5).unwrap().count, 250);
    assert!(coverage_stats(&r, 1.0).is_err());
}

#[test]
fn same_seed_same_run() {
    let cfg = SimConfig::multi_source(churn(60, 0.7, 1.3), 4.0, 3, 20, 400, 99).unwrap();
    let a = run_trial(&cfg).unwrap();
    let b = run_trial(&cfg).unwrap();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.seed = 100;
    assert_ne!(run_trial(&other).unwrap().messages, a.messages);
}

#[test]
fn online_buffers_stay_identical() {
    for (k, multi) in [(1, false), (3, false), (2, true)] {
        let c = churn(50, 1.0, 1.0);
        let mut cfg = if multi {
            SimConfig::multi_source(c, 5.0, k, 50, 2000, 11).unwrap()
        } else {
            SimConfig::single_source(c, 5.0, k, 2000, 11).unwrap()
        };
        cfg.debug_checks = true;
        let r = run_trial(&cfg).unwrap();
        assert!(r.event_count >= 10_000, "{} events", r.event_count);
    }
}

#[test]
fn multi_source_drops_offline_messages() {
    let cfg = SimConfig::multi_source(churn(100, 1.0, 1.0), 10.0, 1, 100, 1000, 4).unwrap();
    let r = run_trial(&cfg).unwrap();
    for m in &r.messages {
        assert_eq!(m.counted, m.source_online);
        if !m.counted {
            assert_eq!(m.coverage, 0);
        }
    }
    let sources: HashSet<usize> = r.messages.iter().map(|m| m.origin).collect();
    assert!(sources.len() > 90);
}

#[test]
fn long_run_online_fraction() {
    let mut cfg = SimConfig::single_source(churn(100, 0.5, 2.0), 1.0, 1, usize::MAX, 8).unwrap();
    cfg.time_horizon = Some(1e4);
    let r = run_trial(&cfg).unwrap();
    assert!(
        (r.online_fraction() / 0.2 - 1.0).abs() < 0.01,
        "{}",
        r.online_fraction()
    );
}

/// Time-averaged online count over independent runs against Binomial(N, p).
#[test]
fn occupancy_is_binomial() {
    let (n, l, m) = (80, 1.0, 3.0);
    let p = l / (l + m);
    let (mut means, mut vars) = (Vec::new(), Vec::new());
    for seed in 0..30 {
        let mut cfg = SimConfig::single_source(churn(n, l, m), 1.0, 1, usize::MAX, seed).unwrap();
        cfg.time_horizon = Some(500.0);
        let r = run_trial(&cfg).unwrap();
        means.push(r.mean_online);
        vars.push(r.online_variance());
    }
    let (mean, se) = mean_and_std_error(&means);
    let (var, se_var) = mean_and_std_error(&vars);
    let (want_mean, want_var) = (n as f64 * p, n as f64 * p * (1.0 - p));
    assert!((mean - want_mean).abs() <= 3.0 * se, "{mean} +- {se} vs {want_mean}");
    // a time average over a finite window underestimates the variance by about
    // 2 tau / T with tau = 1 / (lambda + mu)
    let bias = want_var * 2.0 / ((l + m) * 500.0);
    assert!(
        (var - (want_var - bias)).abs() <= 3.0 * se_var,
        "{var} +- {se_var} vs {want_var}"
    );
}

/// Coverage of `L1-2` messages with a two-message buffer, measured per
/// category, against the interval series. The analytic categories average the
/// growth curve over an unconditioned displacement time, while in the
/// simulation a message's category is decided by when the displacing arrival
/// lands relative to the source's next state change; the per-category values
/// disagree by several peers even though the totals match.
#[test]
#[ignore = "analytic per-category coverage is not conditioned on the category; only totals agree"]
fn second_to_last_online_coverage() {
    let c = churn(100, 1.0, 1.0);
    let want = coverage_l_ik(LastSide::Online, 2, 1.0, &c, 2, Form::FiniteN).unwrap();
    let per_trial: Vec<f64> = (0..20)
        .map(|seed| {
            let r = run_trial(&SimConfig::single_source(c, 1.0, 2, 1000, 500 + seed).unwrap()).unwrap();
            coverage_stats(&r, DEFAULT_DISCARD).unwrap().per_category[&Category::LastOnline(2)].mean
        })
        .collect();
    let (mean, se) = mean_and_std_error(&per_trial);
    assert!((mean - want).abs() <= 3.0 * se, "{mean} +- {se} vs {want}");
}

/// Category shares of a two-message buffer stream against the analytic
/// fractions, Bonferroni-adjusted over the six categories.
#[test]
fn two_buffer_category_shares() {
    let c = churn(100, 1.0, 1.0);
    let fr = fractions_k(1.0, &c, 2).unwrap();
    let cats = [
        Category::One,
        Category::Zero,
        Category::LastOnline(1),
        Category::LastOnline(2),
        Category::LastOffline(1),
        Category::LastOffline(2),
    ];
    let shares: Vec<Vec<f64>> = (0..30)
        .map(|seed| {
            let r = run_trial(&SimConfig::single_source(c, 1.0, 2, 2000, 900 + seed).unwrap()).unwrap();
            let total: usize = r.category_tallies.values().sum();
            cats.iter()
                .map(|cat| r.category_tallies.get(cat).copied().unwrap_or(0) as f64 / total as f64)
                .collect()
        })
        .collect();
    for (i, cat) in cats.iter().enumerate() {
        let col: Vec<f64> = shares.iter().map(|s| s[i]).collect();
        let (mean, se) = mean_and_std_error(&col);
        let want = fr.get(*cat).unwrap();
        assert!((mean - want).abs() <= 3.6 * se, "{cat}: {mean} +- {se} vs {want}");
    }
}

/// Replays the trace with explicit per-peer buffers and recounts coverage.
#[test]
fn trace_replay_reproduces_coverage() {
    let k = 2;
    let mut cfg = SimConfig::single_source(churn(25, 1.0, 1.5), 3.0, k, 300, 21).unwrap();
    cfg.trace = true;
    let r = run_trial(&cfg).unwrap();
    let mut text = Vec::new();
    write_trace(&r.trace, &mut text).unwrap();
    let trace = read_trace(&text[..]).unwrap();
    assert_eq!(trace, r.trace);

    let n = 25;
    let mut online = vec![false; n];
    let mut bufs: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); n];
    let mut holders: Vec<HashSet<usize>> = Vec::new();
    let keep_newest = |s: &mut BTreeSet<u64>| {
        while s.len() > k {
            let oldest = *s.iter().next().unwrap();
            s.remove(&oldest);
        }
    };
    for rec in &trace {
        match rec.kind {
            EventKind::Online => {
                online[rec.peer] = true;
                let mut all = BTreeSet::new();
                for q in (0..n).filter(|&q| online[q]) {
                    all.extend(bufs[q].iter().copied());
                }
                keep_newest(&mut all);
                for q in (0..n).filter(|&q| online[q]) {
                    bufs[q] = all.clone();
                    for &m in &all {
                        holders[m as usize].insert(q);
                    }
                }
            }
            EventKind::Offline => online[rec.peer] = false,
            EventKind::Generate => {
                let m = rec.message.unwrap();
                holders.push(HashSet::new());
                let targets: Vec<usize> = if online[rec.peer] {
                    (0..n).filter(|&q| online[q]).collect()
                } else {
                    vec![rec.peer]
                };
                for q in targets {
                    bufs[q].insert(m);
                    keep_newest(&mut bufs[q]);
                    if bufs[q].contains(&m) {
                        holders[m as usize].insert(q);
                    }
                }
            }
            EventKind::Sample => {}
        }
    }
    let replayed: Vec<u32> = holders.iter().map(|h| h.len() as u32).collect();
    assert_eq!(replayed, r.per_message_coverage());
}
