//! Equilibrium of the churn process and coverage of a single broadcast message.
//!
//! Each of `N` peers toggles independently: offline -> online at rate `lambda`,
//! online -> offline at rate `mu`. In equilibrium the online count is
//! Binomial(N, lambda / (lambda + mu)).
//!
//! A message released by an online source reaches every online peer at once and
//! then every offline peer the first time it comes online, so its expected
//! coverage has the form `ceiling - deficit * exp(-rate * t)` ([`OnlineGrowth`]).

use crate::error::{invalid, ModelError, Result};
use crate::scalar::{ln_binomial, one_minus_exp_over, Scalar};

/// Whether a quantity is an expected peer count for a population of `N`
/// (`FiniteN`) or the normalized `N -> inf` limit (`MeanField`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Form {
    FiniteN,
    MeanField,
}

/// State of the message source at the moment a message is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceState {
    Online,
    Offline,
    /// Source state drawn from equilibrium (online with probability `lambda / (lambda + mu)`).
    Mixed,
}

/// Population size and per-peer churn rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChurnParams<T> {
    pub n_peers: usize,
    /// Offline -> online transitions per unit time.
    pub lambda: T,
    /// Online -> offline transitions per unit time.
    pub mu: T,
}

impl<T: Scalar> ChurnParams<T> {
    pub fn new(n_peers: usize, lambda: T, mu: T) -> Result<Self> {
        let p = Self { n_peers, lambda, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > T::zero()) || !self.lambda.is_finite() {
            return Err(invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.mu > T::zero()) || !self.mu.is_finite() {
            return Err(invalid(format!("mu must be positive, got {}", self.mu)));
        }
        if self.n_peers < 2 {
            return Err(invalid(format!("need at least 2 peers, got {}", self.n_peers)));
        }
        Ok(())
    }

    pub fn n(&self) -> T {
        T::from_count(self.n_peers)
    }

    /// `lambda / (lambda + mu)`: equilibrium probability that a peer is online.
    pub fn online_probability(&self) -> T {
        self.lambda / (self.lambda + self.mu)
    }

    /// `mu / (lambda + mu)`.
    pub fn offline_probability(&self) -> T {
        self.mu / (self.lambda + self.mu)
    }

    /// Mean length of one offline + online cycle, `1/lambda + 1/mu`.
    pub fn mean_cycle(&self) -> T {
        self.lambda.recip() + self.mu.recip()
    }

    /// Whether the finite-N closed forms are defined (`N * mu > lambda + mu`).
    pub fn finite_form_defined(&self) -> bool {
        self.n() * self.mu > self.lambda + self.mu
    }

    /// Expected coverage curve of a message released while its source is online.
    pub fn online_growth(&self, form: Form) -> Result<OnlineGrowth<T>> {
        self.validate()?;
        match form {
            Form::MeanField => Ok(OnlineGrowth {
                ceiling: T::one(),
                deficit: self.offline_probability(),
                rate: self.lambda,
            }),
            Form::FiniteN => {
                if !self.finite_form_defined() {
                    return Err(ModelError::DegenerateClosedForm {
                        n_mu: (self.n() * self.mu).to_f64_lossy(),
                        rate_sum: (self.lambda + self.mu).to_f64_lossy(),
                    });
                }
                let n0 = self.n() * self.offline_probability();
                // (1 - 1/n0)^(n0 * lambda * t) = exp(-rate * t)
                let rate = -n0 * self.lambda * (-n0.recip()).ln_1p();
                Ok(OnlineGrowth {
                    ceiling: self.n(),
                    deficit: n0,
                    rate,
                })
            }
        }
    }
}

/// Expected coverage `ceiling - deficit * exp(-rate * t)` of a message whose
/// source was online at release.
///
/// Mean-field: `1 - mu/(lambda+mu) * exp(-lambda t)`. Finite-N: `N - n0 (1 - 1/n0)^(n0 lambda t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineGrowth<T> {
    pub ceiling: T,
    pub deficit: T,
    pub rate: T,
}

impl<T: Scalar> OnlineGrowth<T> {
    #[inline]
    pub fn at(&self, t: T) -> T {
        self.ceiling - self.deficit * (-self.rate * t).exp()
    }

    /// Coverage at release time.
    pub fn initial(&self) -> T {
        self.ceiling - self.deficit
    }

    /// `int_0^inf at(t) * alpha e^{-alpha t} dt`.
    pub fn exponential_average(&self, alpha: T) -> T {
        self.ceiling - self.deficit * alpha / (alpha + self.rate)
    }
}

/// Stationary distribution of the number of online peers.
#[derive(Debug, Clone, PartialEq)]
pub struct EngsetEquilibrium<T> {
    pub n_online: T,
    pub n_offline: T,
    /// `pmf[n] = P(n peers online)`, `n = 0..=N`.
    pub pmf: Vec<T>,
}

impl<T: Scalar> EngsetEquilibrium<T> {
    pub fn pmf_mean(&self) -> T {
        self.pmf
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (n, &p)| acc + T::from_count(n) * p)
    }
}

/// Equilibrium of the finite-population birth-death chain.
///
/// `p_n = C(N, n) (lambda/mu)^n p_0` with `p_0 = ((lambda+mu)/mu)^{-N}`; evaluated in
/// log space so large `N` neither overflows nor underflows.
pub fn equilibrium<T: Scalar>(params: &ChurnParams<T>) -> Result<EngsetEquilibrium<T>> {
    params.validate()?;
    let n = params.n_peers;
    let nn = params.n();
    let sum = params.lambda + params.mu;
    let ln_ratio = (params.lambda / params.mu).ln();
    let ln_p0 = -nn * (sum / params.mu).ln();
    let mut pmf: Vec<T> = (0..=n)
        .map(|k| (ln_binomial::<T>(n, k) + T::from_count(k) * ln_ratio + ln_p0).exp())
        .collect();
    // Renormalize away accumulated rounding.
    let total = pmf.iter().fold(T::zero(), |a, &b| a + b);
    for p in &mut pmf {
        *p = *p / total;
    }
    let n_online = params.lambda / sum * nn;
    Ok(EngsetEquilibrium {
        n_online,
        n_offline: nn - n_online,
        pmf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageTrajectoryPoint<T> {
    pub t: T,
    pub value: T,
    pub form: Form,
}

/// Expected coverage of a single message `t` time units after release.
///
/// For an initially offline source the message sits at the source alone until the
/// source's first arrival, after which it grows like the online case:
/// `X0(t) = int_0^t X1(t - s) lambda e^{-lambda s} ds + e^{-lambda t}` (finite-N);
/// the source term vanishes in the mean-field limit.
pub fn single_message_coverage<T: Scalar>(
    t: T,
    params: &ChurnParams<T>,
    source: SourceState,
    form: Form,
) -> Result<CoverageTrajectoryPoint<T>> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(invalid(format!("time must be finite and nonnegative, got {t}")));
    }
    let growth = params.online_growth(form)?;
    let online = growth.at(t);
    let offline = || {
        let lambda = params.lambda;
        let decay = (-lambda * t).exp();
        let source_mass = match form {
            Form::FiniteN => decay,
            Form::MeanField => T::zero(),
        };
        let convolved = lambda * t * decay * one_minus_exp_over((growth.rate - lambda) * t);
        growth.ceiling * (T::one() - decay) - growth.deficit * convolved + source_mass
    };
    let value = match source {
        SourceState::Online => online,
        SourceState::Offline => offline(),
        SourceState::Mixed => params.online_probability() * online + params.offline_probability() * offline(),
    };
    Ok(CoverageTrajectoryPoint { t, value, form })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, l: f64, m: f64) -> ChurnParams<f64> {
        ChurnParams::new(n, l, m).unwrap()
    }

    #[test]
    fn symmetric_rates_split_population() {
        let eq = equilibrium(&p(1000, 1.0, 1.0)).unwrap();
        assert_eq!(eq.n_online, 500.0);
        assert_eq!(eq.n_offline, 500.0);
    }

    #[test]
    fn quarter_online() {
        let eq = equilibrium(&p(100, 1.0, 3.0)).unwrap();
        assert!((eq.n_online - 25.0).abs() < 1e-12);
        assert!((eq.n_offline - 75.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ChurnParams::new(1, 1.0, 1.0).is_err());
        assert!(ChurnParams::new(10, 0.0, 1.0).is_err());
        assert!(ChurnParams::new(10, 1.0, -2.0).is_err());
        assert!(ChurnParams::new(10, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn mean_field_initial_values() {
        let c = p(100, 1.0, 1.0);
        let at0 = |s| single_message_coverage(0.0, &c, s, Form::MeanField).unwrap().value;
        assert!((at0(SourceState::Online) - 0.5).abs() < 1e-15);
        assert!(at0(SourceState::Offline).abs() < 1e-15);
        assert!((at0(SourceState::Mixed) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn mean_field_online_at_one() {
        let c = p(100, 1.0, 1.0);
        let v = single_message_coverage(1.0, &c, SourceState::Online, Form::MeanField).unwrap();
        assert!((v.value - (1.0 - (-1f64).exp() / 2.0)).abs() < 1e-15);
        assert!((v.value - 0.81606).abs() < 1e-5);
    }

    #[test]
    fn finite_offline_starts_at_one() {
        let c = p(50, 0.7, 1.3);
        let v = single_message_coverage(0.0, &c, SourceState::Offline, Form::FiniteN).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_finite_form() {
        // N mu = 2 <= lambda + mu = 3
        let c = p(2, 2.0, 1.0);
        let err = single_message_coverage(1.0, &c, SourceState::Online, Form::FiniteN).unwrap_err();
        assert!(matches!(err, ModelError::DegenerateClosedForm { .. }));
        assert!(single_message_coverage(1.0, &c, SourceState::Online, Form::MeanField).is_ok());
    }

    #[test]
    fn negative_time_rejected() {
        let c = p(10, 1.0, 1.0);
        assert!(single_message_coverage(-0.1, &c, SourceState::Online, Form::MeanField).is_err());
    }

    #[test]
    fn works_in_f32() {
        let c = ChurnParams::<f32>::new(100, 1.0, 1.0).unwrap();
        let v = single_message_coverage(1.0f32, &c, SourceState::Online, Form::MeanField).unwrap();
        assert!((v.value - 0.81606).abs() < 1e-5);
        let eq = equilibrium(&c).unwrap();
        let total: f32 = eq.pmf.iter().sum();
        assert!((total - 1.0).abs() < 1e-5);
    }
}
