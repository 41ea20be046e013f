//! Message streams with a `k`-message buffer, and the multi-source stream.
//!
//! With `k` slots a message is displaced only after `k` newer messages reach the
//! buffer. Messages of an online (offline) period that are pushed out before the
//! period ends are `1-k` (`0-k`) messages; the last `k` of a period are
//! `L1-i` / `L0-i`, `i = 1` being the very last.

use std::collections::BTreeMap;

use log::warn;

use crate::engset::{ChurnParams, Form};
use crate::error::{invalid, ModelError, Result};
use crate::intervals::{IntervalSeries, LastSplit};
use crate::numerics::{integrate_halfline_graded, poisson_excess, sum_truncated, Erlang, Feature, Tolerance};
use crate::scalar::{ln_binomial, log_sum_exp, Scalar};
use crate::unit::{
    base_coverage, extended_rate, form_scale, zero_category_coverage, Category, CoverageReport, StreamParams,
};

/// Buffer sizes up to this are the validated operating range; larger sizes are
/// still evaluated but checked for precision loss.
pub const VALIDATED_MAX_K: usize = 20;

/// Below this many sources the multi-source model is not defined.
pub const MIN_SOURCES: usize = 10;
/// Below this many sources the multi-source model is known to undershoot.
pub const WARN_SOURCES: usize = 30;

/// Category fractions of a `k`-buffer stream.
#[derive(Debug, Clone, PartialEq)]
pub struct KFractions<T> {
    pub k: usize,
    pub xi_1k: T,
    pub xi_0k: T,
    /// `xi_l1[i - 1]` is the fraction of `L1-i` messages.
    pub xi_l1: Vec<T>,
    pub xi_l0: Vec<T>,
}

impl<T: Scalar> KFractions<T> {
    pub fn online_total(&self) -> T {
        self.xi_l1.iter().fold(self.xi_1k, |a, &b| a + b)
    }

    pub fn offline_total(&self) -> T {
        self.xi_l0.iter().fold(self.xi_0k, |a, &b| a + b)
    }

    pub fn sum(&self) -> T {
        self.online_total() + self.offline_total()
    }

    pub fn get(&self, category: Category) -> Option<T> {
        match category {
            Category::One => Some(self.xi_1k),
            Category::Zero => Some(self.xi_0k),
            Category::LastOnline(i) if (1..=self.k).contains(&i) => Some(self.xi_l1[i - 1]),
            Category::LastOffline(i) if (1..=self.k).contains(&i) => Some(self.xi_l0[i - 1]),
            _ => None,
        }
    }
}

/// Which side of the churn cycle a last-message category belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LastSide {
    Online,
    Offline,
}

/// Stream model used when searching for a buffer size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamModel {
    SingleSource,
    MultiSource { n_sources: usize },
}

fn check_inputs<T: Scalar>(alpha: T, params: &ChurnParams<T>, k: usize) -> Result<()> {
    params.validate()?;
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(invalid(format!("alpha must be positive and finite, got {alpha}")));
    }
    if k == 0 {
        return Err(invalid("buffer size must be at least 1"));
    }
    Ok(())
}

/// Fractions for one side of the cycle: the period in that state ends at rate
/// `leave_rate` and holds `share` of all messages.
///
/// Returns `(pushed_out, last[i-1])`, where
/// `pushed_out = share * (leave/alpha) * int E[(Poisson(alpha t) - k)^+] leave e^{-leave t} dt`
/// and `last[i-1]` is the telescoping difference between buffer sizes `i - 1`
/// and `i`, taken inside the integral: `E[(X-i+1)^+] - E[(X-i)^+] = P(X >= i)`.
fn side_fractions<T: Scalar>(alpha: T, leave_rate: T, share: T, k: usize) -> Result<(T, Vec<T>)> {
    let tol = Tolerance::fine();
    let scale = share * leave_rate / alpha;
    let decay = leave_rate / T::lit(2.0);
    let leave_scale = Feature {
        center: T::zero(),
        width: T::one() / leave_rate,
    };
    let pushed = integrate_halfline_graded(
        |t| poisson_excess(alpha * t, k) * leave_rate * (-leave_rate * t).exp(),
        decay,
        &[Erlang::new(k, alpha)?.feature(), leave_scale],
        &tol,
    )?
    .value
        * scale;
    let mut last = Vec::with_capacity(k);
    for i in 1..=k {
        let arrivals = Erlang::new(i, alpha)?;
        let v = integrate_halfline_graded(
            |t| arrivals.cdf(t) * leave_rate * (-leave_rate * t).exp(),
            decay,
            &[arrivals.feature(), leave_scale],
            &tol,
        )?
        .value
            * scale;
        last.push(v);
    }
    Ok((pushed, last))
}

/// Category fractions for buffer size `k`.
pub fn fractions_k<T: Scalar>(alpha: T, params: &ChurnParams<T>, k: usize) -> Result<KFractions<T>> {
    check_inputs(alpha, params, k)?;
    let (xi_1k, xi_l1) = side_fractions(alpha, params.mu, params.online_probability(), k)?;
    let (xi_0k, xi_l0) = side_fractions(alpha, params.lambda, params.offline_probability(), k)?;
    let fr = KFractions {
        k,
        xi_1k,
        xi_0k,
        xi_l1,
        xi_l0,
    };
    let drift = (fr.sum() - T::one()).abs();
    if !drift.is_finite() || drift > T::lit(1e-8).max(T::epsilon() * T::lit(1e3)) {
        return Err(ModelError::PrecisionLoss(format!(
            "k = {k}: fractions sum deviates from 1 by {drift}"
        )));
    }
    Ok(fr)
}

/// Mean coverage of `1-k` messages: the source-online growth curve averaged
/// over the Erlang(k, alpha) time until `k` newer messages arrive.
pub fn coverage_1k<T: Scalar>(alpha: T, params: &ChurnParams<T>, k: usize, form: Form) -> Result<T> {
    check_inputs(alpha, params, k)?;
    let growth = params.online_growth(form)?;
    let waiting = Erlang::new(k, alpha)?;
    let decay = alpha / T::from_count(k);
    let growth_scale = Feature {
        center: T::zero(),
        width: T::one() / growth.rate,
    };
    let feats = [waiting.feature(), growth_scale];
    Ok(integrate_halfline_graded(|t| growth.at(t) * waiting.pdf(t), decay, &feats, &Tolerance::fine())?.value)
}

/// Split coverage of `L1-i` or `L0-i` messages with a `k`-buffer.
///
/// The message still needs `k - (i - 1)` arrivals to be displaced, so the
/// displacement time is Erlang(k - i + 1, alpha). `L1-i` messages have already
/// been spreading for about `(i - 1) / alpha` when their period ends.
pub fn coverage_l_ik_split<T: Scalar>(
    side: LastSide,
    i: usize,
    alpha: T,
    params: &ChurnParams<T>,
    k: usize,
    form: Form,
) -> Result<LastSplit<T>> {
    check_inputs(alpha, params, k)?;
    if i == 0 || i > k {
        return Err(invalid(format!("position {i} outside 1..={k}")));
    }
    let waiting = Erlang::new(k - i + 1, alpha)?;
    let series = IntervalSeries::new(params, params.online_growth(form)?, waiting);
    match side {
        LastSide::Online => series.last_online(T::from_count(i - 1) / alpha),
        LastSide::Offline => series.last_offline(),
    }
}

pub fn coverage_l_ik<T: Scalar>(
    side: LastSide,
    i: usize,
    alpha: T,
    params: &ChurnParams<T>,
    k: usize,
    form: Form,
) -> Result<T> {
    Ok(coverage_l_ik_split(side, i, alpha, params, k, form)?.total())
}

/// Mean coverage of a `k`-buffer stream.
///
/// `xi_{1-k} C_{1-k} + xi_{0-k} C_0 + sum_i xi_{L1-i} C_{L1-i} + sum_i xi_{L0-i} C_{L0-i}`,
/// where `C_0` is 1 for finite N and 0 in the mean-field limit.
pub fn total_coverage_k<T: Scalar>(
    alpha: T,
    params: &ChurnParams<T>,
    k: usize,
    form: Form,
) -> Result<CoverageReport<T>> {
    let fr = fractions_k(alpha, params, k)?;
    let c1 = coverage_1k(alpha, params, k, form)?;
    let c0 = zero_category_coverage(form);
    let mut per_category = BTreeMap::from([(Category::One, c1), (Category::Zero, c0)]);
    let mut total = fr.xi_1k * c1 + fr.xi_0k * c0;
    for i in 1..=k {
        for (side, xi, cat) in [
            (LastSide::Online, fr.xi_l1[i - 1], Category::LastOnline(i)),
            (LastSide::Offline, fr.xi_l0[i - 1], Category::LastOffline(i)),
        ] {
            let c = coverage_l_ik(side, i, alpha, params, k, form)?;
            per_category.insert(cat, c);
            total = total + xi * c;
        }
    }
    let scale = form_scale(params, form);
    if !total.is_finite() || total > scale * (T::one() + T::lit(1e-9)) {
        return Err(ModelError::PrecisionLoss(format!(
            "k = {k}: coverage {total} out of range"
        )));
    }
    let base = base_coverage(params, form)?;
    Ok(CoverageReport {
        form,
        total,
        total_normalized: total / scale,
        base,
        base_normalized: base / scale,
        rate: extended_rate(alpha, total, base, scale),
        per_category,
        churn: *params,
        stream: StreamParams {
            alpha,
            buffer_k: k,
            n_sources: 1,
        },
    })
}

/// `ln P(I >= i)` for the number of arrivals `I` needed to collect `k` online
/// arrivals, i.e. fewer than `k` successes in the first `i - 1` trials.
fn ln_class_tail<T: Scalar>(p: T, q: T, k: usize, i: usize) -> T {
    if i <= k {
        return T::zero();
    }
    let n = i - 1;
    let terms: Vec<T> = (0..k)
        .map(|s| ln_binomial::<T>(n, s) + T::from_count(s) * p.ln() + T::from_count(n - s) * q.ln())
        .collect();
    log_sum_exp(&terms).min(T::zero())
}

/// Probability that `i` arrivals in total are needed to collect the `k` online
/// ones: `C(i-1, k-1) q^(i-k) p^k`.
pub fn multisource_class_weight<T: Scalar>(params: &ChurnParams<T>, k: usize, i: usize) -> T {
    if k == 0 || i < k {
        return T::zero();
    }
    let p = params.online_probability();
    let q = params.offline_probability();
    (ln_binomial::<T>(i - 1, k - 1) + T::from_count(i - k) * q.ln() + T::from_count(k) * p.ln()).exp()
}

/// Mean coverage of online-generated messages when `n_sources` peers share a
/// network-wide rate `alpha`.
///
/// Messages from offline sources never enter a buffer. An online message stays
/// buffered until `k` further online messages arrive; counting all `i >= k`
/// arrivals up to that point, the classes are weighted by
/// [`multisource_class_weight`] and each averages the growth curve over
/// Erlang(i, alpha).
pub fn multisource_coverage<T: Scalar>(
    alpha: T,
    params: &ChurnParams<T>,
    k: usize,
    n_sources: usize,
    form: Form,
) -> Result<T> {
    check_inputs(alpha, params, k)?;
    if n_sources < MIN_SOURCES {
        return Err(ModelError::ModelOutOfRange(format!(
            "multi-source model needs at least {MIN_SOURCES} sources, got {n_sources}"
        )));
    }
    if n_sources > params.n_peers {
        return Err(invalid(format!("{n_sources} sources exceed {} peers", params.n_peers)));
    }
    if n_sources < WARN_SOURCES {
        warn!("multi-source model with {n_sources} sources tends to undershoot");
    }
    let p = params.online_probability();
    let q = params.offline_probability();
    let ceiling = form_scale(params, form);
    let tol = Tolerance::fine();
    let sum = sum_truncated(
        |j| {
            let i = k + j;
            let w = multisource_class_weight(params, k, i);
            if w == T::zero() {
                return Ok(T::zero());
            }
            Ok(w * coverage_1k(alpha, params, i, form)?)
        },
        |j| ceiling * ln_class_tail(p, q, k, k + j).exp(),
        &tol,
    )?;
    Ok(sum.value)
}

fn model_coverage<T: Scalar>(alpha: T, params: &ChurnParams<T>, k: usize, model: StreamModel, form: Form) -> Result<T> {
    match model {
        StreamModel::SingleSource => Ok(total_coverage_k(alpha, params, k, form)?.total_normalized),
        StreamModel::MultiSource { n_sources } => {
            Ok(multisource_coverage(alpha, params, k, n_sources, form)? / form_scale(params, form))
        }
    }
}

/// Largest buffer size [`min_k_for_coverage`] will consider.
pub const MAX_SEARCH_K: usize = 512;

/// Smallest buffer size whose normalized coverage reaches `target`.
///
/// Coverage is non-decreasing in `k`, so the search gallops over powers of two
/// and bisects the last bracket.
pub fn min_k_for_coverage<T: Scalar>(
    alpha: T,
    params: &ChurnParams<T>,
    target: T,
    model: StreamModel,
    form: Form,
) -> Result<usize> {
    check_inputs(alpha, params, 1)?;
    if !(target > T::zero()) || !target.is_finite() {
        return Err(invalid(format!("target must be in (0, 1), got {target}")));
    }
    let unreachable = || ModelError::TargetUnreachable {
        target: target.to_f64_lossy(),
        max_k: MAX_SEARCH_K,
    };
    if target >= T::one() {
        return Err(unreachable());
    }
    let reaches = |k: usize| -> Result<bool> { Ok(model_coverage(alpha, params, k, model, form)? >= target) };
    if reaches(1)? {
        return Ok(1);
    }
    let mut lo = 1; // known to miss
    let mut hi = 2;
    loop {
        if hi > MAX_SEARCH_K {
            if reaches(MAX_SEARCH_K)? {
                hi = MAX_SEARCH_K;
                break;
            }
            return Err(unreachable());
        }
        if reaches(hi)? {
            break;
        }
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unit::{category_coverage, category_fractions, total_coverage};

    fn p(l: f64, m: f64) -> ChurnParams<f64> {
        ChurnParams::new(100, l, m).unwrap()
    }

    #[test]
    fn unit_buffer_fractions_reduce() {
        let c = p(1.0, 1.0);
        let k = fractions_k(1.0, &c, 1).unwrap();
        let u = category_fractions(1.0, &c).unwrap();
        assert!((k.xi_1k - u.xi_1).abs() < 1e-12);
        assert!((k.xi_0k - u.xi_0).abs() < 1e-12);
        assert!((k.xi_l1[0] - u.xi_l1).abs() < 1e-12);
        assert!((k.xi_l0[0] - u.xi_l0).abs() < 1e-12);
    }

    #[test]
    fn big_buffer_pushes_nothing_out() {
        let k = fractions_k(1.0, &p(1.0, 1.0), 60).unwrap();
        assert!(k.xi_1k < 1e-15 && k.xi_0k < 1e-15);
        assert!((k.sum() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coverage_1k_reduces_to_category_one() {
        let c = p(1.0, 1.0);
        let v = coverage_1k(1.0, &c, 1, Form::MeanField).unwrap();
        assert!((v - 0.75).abs() < 1e-12);
        let u = category_coverage(Category::One, 1.0, &c, Form::MeanField).unwrap();
        assert!((v - u).abs() < 1e-12);
    }

    #[test]
    fn total_reduces_at_k1() {
        let c = p(0.5, 1.0);
        for form in [Form::MeanField, Form::FiniteN] {
            let a = total_coverage_k(2.0, &c, 1, form).unwrap().total_normalized;
            let b = total_coverage(2.0, &c, form).unwrap().total_normalized;
            assert!((a - b).abs() < 1e-11, "{form:?}: {a} vs {b}");
        }
    }

    #[test]
    fn l_position_out_of_range() {
        let c = p(1.0, 1.0);
        assert!(coverage_l_ik(LastSide::Online, 0, 1.0, &c, 2, Form::MeanField).is_err());
        assert!(coverage_l_ik(LastSide::Online, 3, 1.0, &c, 2, Form::MeanField).is_err());
    }

    #[test]
    fn class_weights_are_negative_binomial() {
        let c = p(1.0, 3.0);
        // k = 1: geometric q^{i-1} p
        assert!((multisource_class_weight(&c, 1, 3) - 0.75f64.powi(2) * 0.25).abs() < 1e-15);
        // k = 2, i = 4: C(3,1) q^2 p^2
        assert!((multisource_class_weight(&c, 2, 4) - 3.0 * 0.5625 * 0.0625).abs() < 1e-15);
        assert_eq!(multisource_class_weight(&c, 3, 2), 0.0);
    }

    #[test]
    fn class_tail_matches_weight_sum() {
        let c = p(0.5, 1.0);
        let (pp, qq) = (c.online_probability(), c.offline_probability());
        let k = 3;
        let head: f64 = (k..10).map(|i| multisource_class_weight(&c, k, i)).sum();
        let tail = ln_class_tail(pp, qq, k, 10).exp();
        assert!((head + tail - 1.0).abs() < 1e-13);
    }

    #[test]
    fn few_sources_out_of_range() {
        let err = multisource_coverage(1.0, &p(1.0, 1.0), 1, 9, Form::MeanField).unwrap_err();
        assert!(matches!(err, ModelError::ModelOutOfRange(_)));
    }

    #[test]
    fn min_k_trivial_target() {
        let k = min_k_for_coverage(1.0, &p(1.0, 1.0), 1e-6, StreamModel::SingleSource, Form::MeanField).unwrap();
        assert_eq!(k, 1);
    }

    #[test]
    fn min_k_full_coverage_unreachable() {
        let err = min_k_for_coverage(1.0, &p(1.0, 1.0), 1.0, StreamModel::SingleSource, Form::MeanField).unwrap_err();
        assert!(matches!(err, ModelError::TargetUnreachable { .. }));
    }
}
