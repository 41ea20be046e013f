use super::Feature;
use crate::error::{invalid, Result};
use crate::scalar::{ln_factorial, log_sum_exp, Scalar};

/// Shapes above this are evaluated in log space.
const DIRECT_SHAPE_LIMIT: usize = 30;

/// Erlang distribution: the waiting time for the `shape`-th event of a Poisson
/// process with the given `rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Erlang<T> {
    shape: usize,
    rate: T,
    ln_norm: T,
    norm: T,
}

impl<T: Scalar> Erlang<T> {
    pub fn new(shape: usize, rate: T) -> Result<Self> {
        if shape == 0 {
            return Err(invalid("Erlang shape must be at least 1"));
        }
        if !(rate > T::zero()) || !rate.is_finite() {
            return Err(invalid("Erlang rate must be positive and finite"));
        }
        let ln_fact = ln_factorial::<T>(shape - 1);
        let ln_norm = T::from_count(shape) * rate.ln() - ln_fact;
        // r^m / (m-1)! evaluated as a product so small shapes stay exact.
        let norm = (1..=shape).fold(T::one(), |acc, i| {
            if i < shape {
                acc * rate / T::from_count(i)
            } else {
                acc * rate
            }
        });
        Ok(Self {
            shape,
            rate,
            ln_norm,
            norm,
        })
    }

    pub fn shape(&self) -> usize {
        self.shape
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn mean(&self) -> T {
        T::from_count(self.shape) / self.rate
    }

    /// Where the density lives: centered on the mode, with the standard
    /// deviation (at least `1/rate`) as width.
    pub fn feature(&self) -> Feature<T> {
        Feature {
            center: T::from_count(self.shape - 1) / self.rate,
            width: T::from_count(self.shape).sqrt() / self.rate,
        }
    }

    pub fn pdf(&self, t: T) -> T {
        if self.shape > DIRECT_SHAPE_LIMIT {
            return self.pdf_log_space(t);
        }
        let v = self.pdf_direct(t);
        if v.is_finite() {
            v
        } else {
            self.pdf_log_space(t)
        }
    }

    pub(crate) fn pdf_direct(&self, t: T) -> T {
        if t < T::zero() {
            return T::zero();
        }
        self.norm * t.powi(self.shape as i32 - 1) * (-self.rate * t).exp()
    }

    pub(crate) fn pdf_log_space(&self, t: T) -> T {
        if t < T::zero() {
            return T::zero();
        }
        if t == T::zero() {
            return if self.shape == 1 { self.rate } else { T::zero() };
        }
        (self.ln_norm + T::from_count(self.shape - 1) * t.ln() - self.rate * t).exp()
    }

    /// `P(T > t) = sum_{n < shape} Poisson(n; rate * t)`.
    pub fn survival(&self, t: T) -> T {
        if t <= T::zero() {
            return T::one();
        }
        let x = self.rate * t;
        let ln_x = x.ln();
        let mut ln_terms = Vec::with_capacity(self.shape);
        let mut ln_term = -x;
        ln_terms.push(ln_term);
        for n in 1..self.shape {
            ln_term = ln_term + ln_x - T::from_count(n).ln();
            ln_terms.push(ln_term);
        }
        log_sum_exp(&ln_terms).exp().min(T::one())
    }

    /// `P(T <= t) = sum_{n >= shape} Poisson(n; rate * t)`, summed directly so
    /// small probabilities keep their relative precision.
    pub fn cdf(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let x = self.rate * t;
        if x > T::from_count(self.shape) {
            return T::one() - self.survival(t);
        }
        let ln_x = x.ln();
        let mut ln_term = T::from_count(self.shape) * ln_x - x - ln_factorial::<T>(self.shape);
        let mut sum = T::zero();
        let mut n = self.shape;
        loop {
            let term = ln_term.exp();
            sum = sum + term;
            if term <= sum * T::epsilon() || n > self.shape + 100_000 {
                break;
            }
            n += 1;
            ln_term = ln_term + ln_x - T::from_count(n).ln();
        }
        sum.min(T::one())
    }

    /// Probability mass on `[a, b]`.
    pub fn interval_mass(&self, a: T, b: T) -> T {
        let a = a.max(T::zero());
        if b <= a {
            return T::zero();
        }
        let sa = self.survival(a);
        if sa < T::lit(0.5) {
            (sa - self.survival(b)).max(T::zero())
        } else {
            (self.cdf(b) - self.cdf(a)).max(T::zero())
        }
    }
}

/// Erlang density `rate^shape t^(shape-1) e^(-rate t) / (shape-1)!`.
pub fn erlang_pdf<T: Scalar>(t: T, shape: usize, rate: T) -> Result<T> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(invalid("Erlang density needs finite t >= 0"));
    }
    Ok(Erlang::new(shape, rate)?.pdf(t))
}

/// `E[max(X - k, 0)]` for `X ~ Poisson(mean)`.
///
/// Below the mean the complement identity `mean - k + E[max(k - X, 0)]` turns
/// this into a finite sum; above it the upper tail is summed until the terms
/// fall under `1e-14` of the running total.
pub fn poisson_excess<T: Scalar>(mean: T, k: usize) -> T {
    if mean <= T::zero() {
        return T::zero();
    }
    let kk = T::from_count(k);
    let ln_mean = mean.ln();
    if mean > kk {
        let mut ln_p = -mean;
        let mut shortfall = T::zero();
        for j in 0..k {
            if j > 0 {
                ln_p = ln_p + ln_mean - T::from_count(j).ln();
            }
            shortfall = shortfall + T::from_count(k - j) * ln_p.exp();
        }
        mean - kk + shortfall
    } else {
        let mut j = k + 1;
        let mut ln_p = T::from_count(j) * ln_mean - mean - ln_factorial::<T>(j);
        let mut sum = T::zero();
        let cutoff = T::lit(1e-14).max(T::epsilon());
        loop {
            let term = T::from_count(j - k) * ln_p.exp();
            sum = sum + term;
            if term <= cutoff * sum || term == T::zero() {
                break;
            }
            j += 1;
            ln_p = ln_p + ln_mean - T::from_count(j).ln();
        }
        sum
    }
}
