//! Message streams with a one-message buffer.
//!
//! A single source emits messages at rate `alpha`. Every message falls into one
//! of four categories according to the source state at its arrival and whether
//! it is the last arrival of that online/offline period:
//!
//! | category | arrives while | last of period | spreads until |
//! |----------|---------------|----------------|---------------|
//! | `1`      | online        | no             | next arrival |
//! | `L1`     | online        | yes            | next arrival seen by an online source |
//! | `0`      | offline       | no             | never (coverage 1) |
//! | `L0`     | offline       | yes            | as `L1`, starting when the source returns |

use std::collections::BTreeMap;
use std::fmt;

use crate::engset::{ChurnParams, Form};
use crate::error::{invalid, Result};
use crate::intervals::{IntervalSeries, LastSplit};
use crate::numerics::Erlang;
use crate::scalar::Scalar;

/// Message-stream parameters: network-wide arrival rate, buffer size, source count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamParams<T> {
    pub alpha: T,
    pub buffer_k: usize,
    pub n_sources: usize,
}

impl<T: Scalar> StreamParams<T> {
    pub fn new(alpha: T, buffer_k: usize, n_sources: usize) -> Result<Self> {
        let s = Self {
            alpha,
            buffer_k,
            n_sources,
        };
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        if buffer_k == 0 {
            return Err(invalid("buffer size must be at least 1"));
        }
        if n_sources == 0 {
            return Err(invalid("need at least one source"));
        }
        Ok(s)
    }

    pub fn validate_against(&self, churn: &ChurnParams<T>) -> Result<()> {
        Self::new(self.alpha, self.buffer_k, self.n_sources)?;
        if self.n_sources > churn.n_peers {
            return Err(invalid(format!(
                "{} sources exceed population of {}",
                self.n_sources, churn.n_peers
            )));
        }
        Ok(())
    }
}

/// Message category. `LastOnline(i)` / `LastOffline(i)` is the message `i - 1`
/// arrivals before the end of its period; the unit buffer only uses `i = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    One,
    Zero,
    LastOnline(usize),
    LastOffline(usize),
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::One => write!(f, "1"),
            Category::Zero => write!(f, "0"),
            Category::LastOnline(i) => write!(f, "L1-{i}"),
            Category::LastOffline(i) => write!(f, "L0-{i}"),
        }
    }
}

/// Fractions of a unit-buffer stream falling in each category.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryFractions<T> {
    pub xi_1: T,
    pub xi_0: T,
    pub xi_l1: T,
    pub xi_l0: T,
}

impl<T: Scalar> CategoryFractions<T> {
    pub fn sum(&self) -> T {
        self.xi_1 + self.xi_0 + self.xi_l1 + self.xi_l0
    }

    pub fn get(&self, category: Category) -> Option<T> {
        match category {
            Category::One => Some(self.xi_1),
            Category::Zero => Some(self.xi_0),
            Category::LastOnline(1) => Some(self.xi_l1),
            Category::LastOffline(1) => Some(self.xi_l0),
            _ => None,
        }
    }
}

/// Coverage summary of a stream, all values in one [`Form`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport<T> {
    pub form: Form,
    /// Mean coverage per message.
    pub total: T,
    pub total_normalized: T,
    pub base: T,
    pub base_normalized: T,
    /// Extended coverage rate (message-peers per unit time).
    pub rate: T,
    pub per_category: BTreeMap<Category, T>,
    pub churn: ChurnParams<T>,
    pub stream: StreamParams<T>,
}

pub(crate) fn form_scale<T: Scalar>(params: &ChurnParams<T>, form: Form) -> T {
    match form {
        Form::FiniteN => params.n(),
        Form::MeanField => T::one(),
    }
}

pub(crate) fn zero_category_coverage<T: Scalar>(form: Form) -> T {
    match form {
        Form::FiniteN => T::one(),
        Form::MeanField => T::zero(),
    }
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(invalid(format!("alpha must be positive and finite, got {alpha}")));
    }
    Ok(())
}

/// Category fractions of a unit-buffer stream.
///
/// `xi_0 = alpha mu / ((alpha+lambda)(lambda+mu))`, `xi_1 = alpha lambda / ((alpha+mu)(lambda+mu))`,
/// and the last-message fractions make up the remainder of each state's share.
pub fn category_fractions<T: Scalar>(alpha: T, params: &ChurnParams<T>) -> Result<CategoryFractions<T>> {
    check_alpha(alpha)?;
    params.validate()?;
    let (l, m) = (params.lambda, params.mu);
    let s = l + m;
    Ok(CategoryFractions {
        xi_1: alpha * l / ((alpha + m) * s),
        xi_0: alpha * m / ((alpha + l) * s),
        xi_l1: l * m / ((alpha + m) * s),
        xi_l0: l * m / ((alpha + l) * s),
    })
}

/// Mean coverage of messages in `category`.
pub fn category_coverage<T: Scalar>(category: Category, alpha: T, params: &ChurnParams<T>, form: Form) -> Result<T> {
    check_alpha(alpha)?;
    match category {
        Category::Zero => {
            params.validate()?;
            Ok(zero_category_coverage(form))
        }
        Category::One => Ok(params.online_growth(form)?.exponential_average(alpha)),
        Category::LastOnline(1) => Ok(last_online_split(alpha, params, form)?.total()),
        Category::LastOffline(1) => Ok(last_offline_split(alpha, params, form)?.total()),
        other => Err(invalid(format!("category {other} does not exist with a unit buffer"))),
    }
}

/// `L1-0` / `L1-1` parts of the last-online coverage, by interval series.
pub fn last_online_split<T: Scalar>(alpha: T, params: &ChurnParams<T>, form: Form) -> Result<LastSplit<T>> {
    check_alpha(alpha)?;
    let series = IntervalSeries::new(params, params.online_growth(form)?, Erlang::new(1, alpha)?);
    series.last_online(T::zero())
}

/// `L0-0` / `L0-1` parts of the last-offline coverage, by interval series.
pub fn last_offline_split<T: Scalar>(alpha: T, params: &ChurnParams<T>, form: Form) -> Result<LastSplit<T>> {
    check_alpha(alpha)?;
    let series = IntervalSeries::new(params, params.online_growth(form)?, Erlang::new(1, alpha)?);
    series.last_offline()
}

/// Closed form of the mean-field last-online coverage; used to cross-check the series.
///
/// Written with every exponential divided through by the largest one so that it
/// stays finite for large `alpha`.
pub fn last_online_closed_form<T: Scalar>(alpha: T, params: &ChurnParams<T>) -> T {
    let (a, l, m) = (alpha, params.lambda, params.mu);
    let e_inv = (-T::one()).exp();
    let x = (a + l) * (l + m) / (l * m);
    let num = a * (-x).exp() + l * (-a / l).exp() * e_inv - (a + l) * e_inv;
    T::one() + m * num / ((-(-x).exp_m1()) * (a + l) * (l + m))
}

/// Closed form of the mean-field last-offline coverage; see [`last_online_closed_form`].
pub fn last_offline_closed_form<T: Scalar>(alpha: T, params: &ChurnParams<T>) -> T {
    let (a, l, m) = (alpha, params.lambda, params.mu);
    let e = T::E();
    let x = (a + l) * (l + m) / (l * m);
    let lead = (-(a + l) / m - T::one()).exp() * ((e - T::one()) * a - l) + l * (-x).exp();
    let first = m * lead / (-(-x).exp_m1());
    (first + l * (a + l + m)) / ((a + l) * (l + m))
}

/// Base coverage: the large-`alpha` limit of the mean coverage.
///
/// Finite-N `lambda/(lambda+mu) * n1 + mu/(lambda+mu)`; mean-field `(lambda/(lambda+mu))^2`.
pub fn base_coverage<T: Scalar>(params: &ChurnParams<T>, form: Form) -> Result<T> {
    params.validate()?;
    let p = params.online_probability();
    Ok(match form {
        Form::FiniteN => p * p * params.n() + params.offline_probability(),
        Form::MeanField => p * p,
    })
}

pub(crate) fn extended_rate<T: Scalar>(alpha: T, total: T, base: T, scale: T) -> T {
    (alpha * (total - base) / (scale - base)).max(T::zero())
}

/// Mean coverage of a unit-buffer stream with per-category detail.
pub fn total_coverage<T: Scalar>(alpha: T, params: &ChurnParams<T>, form: Form) -> Result<CoverageReport<T>> {
    let fr = category_fractions(alpha, params)?;
    let c1 = category_coverage(Category::One, alpha, params, form)?;
    let c0 = zero_category_coverage(form);
    let cl1 = last_online_split(alpha, params, form)?.total();
    let cl0 = last_offline_split(alpha, params, form)?.total();
    let total = fr.xi_1 * c1 + fr.xi_0 * c0 + fr.xi_l1 * cl1 + fr.xi_l0 * cl0;
    let scale = form_scale(params, form);
    let base = base_coverage(params, form)?;
    let per_category = BTreeMap::from([
        (Category::One, c1),
        (Category::Zero, c0),
        (Category::LastOnline(1), cl1),
        (Category::LastOffline(1), cl0),
    ]);
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
            buffer_k: 1,
            n_sources: 1,
        },
    })
}

/// Extended coverage rate `alpha (C - C_base) / (N - C_base)`; zero at `alpha = 0`.
pub fn coverage_rate<T: Scalar>(alpha: T, params: &ChurnParams<T>, form: Form) -> Result<T> {
    if alpha == T::zero() {
        params.validate()?;
        return Ok(T::zero());
    }
    Ok(total_coverage(alpha, params, form)?.rate)
}

/// Saturation value of the mean-field coverage rate as `alpha -> inf`:
/// `lambda (e (2 lambda + mu) - mu) / (e (2 lambda + mu))`.
pub fn coverage_rate_limit<T: Scalar>(params: &ChurnParams<T>) -> Result<T> {
    params.validate()?;
    let (l, m) = (params.lambda, params.mu);
    let e = T::E();
    let w = T::lit(2.0) * l + m;
    Ok(l * (e * w - m) / (e * w))
}

/// Limit of [`coverage_rate_limit`] as `mu -> inf` as well: `(e - 1) lambda / e`.
pub fn coverage_rate_double_limit<T: Scalar>(lambda: T) -> Result<T> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(invalid("lambda must be positive"));
    }
    let e = T::E();
    Ok((e - T::one()) * lambda / e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(l: f64, m: f64) -> ChurnParams<f64> {
        ChurnParams::new(100, l, m).unwrap()
    }

    #[test]
    fn symmetric_fractions_are_quarters() {
        let f = category_fractions(1.0, &p(1.0, 1.0)).unwrap();
        for v in [f.xi_1, f.xi_0, f.xi_l1, f.xi_l0] {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn slow_stream_is_all_last_messages() {
        let c = p(0.7, 1.9);
        let f = category_fractions(1e-9, &c).unwrap();
        assert!(f.xi_1 < 1e-8 && f.xi_0 < 1e-8);
        assert!((f.xi_l1 - c.online_probability()).abs() < 1e-8);
        assert!((f.xi_l0 - c.offline_probability()).abs() < 1e-8);
    }

    #[test]
    fn fast_stream_has_no_last_messages() {
        let f = category_fractions(1e9, &p(0.7, 1.9)).unwrap();
        assert!(f.xi_l1 < 1e-8 && f.xi_l0 < 1e-8);
    }

    #[test]
    fn zero_category() {
        let c = p(1.0, 1.0);
        assert_eq!(category_coverage(Category::Zero, 1.0, &c, Form::FiniteN).unwrap(), 1.0);
        assert_eq!(
            category_coverage(Category::Zero, 1.0, &c, Form::MeanField).unwrap(),
            0.0
        );
    }

    #[test]
    fn one_category_limits() {
        let c = p(1.0, 1.0);
        let at = |a| category_coverage(Category::One, a, &c, Form::MeanField).unwrap();
        assert!((at(1e-9) - 1.0).abs() < 1e-8);
        assert!((at(1.0) - 0.75).abs() < 1e-15);
        assert!((at(1e12) - 0.5).abs() < 1e-11);
    }

    #[test]
    fn unknown_category_rejected() {
        let c = p(1.0, 1.0);
        assert!(category_coverage(Category::LastOnline(2), 1.0, &c, Form::MeanField).is_err());
    }

    #[test]
    fn base_coverage_values() {
        assert!((base_coverage(&p(1.0, 1.0), Form::FiniteN).unwrap() - 25.5).abs() < 1e-12);
        assert!((base_coverage(&p(1.0, 1.0), Form::MeanField).unwrap() - 0.25).abs() < 1e-15);
        assert!((base_coverage(&p(1.0, 1e-12), Form::MeanField).unwrap() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn rate_limit_values() {
        let e = std::f64::consts::E;
        let v = coverage_rate_limit(&p(1.0, 1.0)).unwrap();
        assert!((v - (3.0 * e - 1.0) / (3.0 * e)).abs() < 1e-15);
        assert!((v - 0.877_374).abs() < 1e-6);
        let wide = coverage_rate_limit(&p(1.0, 1e8)).unwrap();
        assert!((wide - (e - 1.0) / e).abs() < 1e-7);
        assert!((coverage_rate_double_limit(1.0f64).unwrap() - 0.632_12).abs() < 1e-5);
        assert!(coverage_rate_limit(&p(1e-12, 1.0)).unwrap() < 1e-11);
    }

    #[test]
    fn zero_alpha_rate_is_zero() {
        assert_eq!(coverage_rate(0.0, &p(1.0, 1.0), Form::MeanField).unwrap(), 0.0);
    }

    #[test]
    fn closed_forms_survive_huge_alpha() {
        let c = p(1.0, 1.0);
        let l1 = last_online_closed_form(1e6, &c);
        let l0 = last_offline_closed_form(1e6, &c);
        assert!(l1.is_finite() && l0.is_finite());
        assert!((l1 - (1.0 - 0.5 / std::f64::consts::E)).abs() < 1e-5);
        assert!((l0 - 0.5).abs() < 1e-5);
    }

    #[test]
    fn stream_params_validation() {
        assert!(StreamParams::new(0.0, 1, 1).is_err());
        assert!(StreamParams::new(1.0, 0, 1).is_err());
        assert!(StreamParams::new(1.0, 1, 0).is_err());
        let s = StreamParams::new(1.0, 1, 200).unwrap();
        assert!(s.validate_against(&p(1.0, 1.0)).is_err());
    }
}
