//! Scalar abstraction shared by every analytic routine.
//!
//! The models only need real arithmetic with `exp`/`ln`, so anything that is a
//! `num_traits::Float` (in practice `f32` and `f64`) qualifies.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the analytic models are evaluated in.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every `f64` is representable (possibly rounded) in
    /// the supported types, so this never fails for finite input.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// `ln(n!)` by direct summation; exact enough for the shapes used here (n in the low thousands).
pub(crate) fn ln_factorial<T: Scalar>(n: usize) -> T {
    (2..=n).fold(T::zero(), |acc, i| acc + T::from_count(i).ln())
}

/// `ln C(n, k)`.
pub(crate) fn ln_binomial<T: Scalar>(n: usize, k: usize) -> T {
    debug_assert!(k <= n);
    let k = k.min(n - k);
    (0..k).fold(T::zero(), |acc, i| {
        acc + (T::from_count(n - i) / T::from_count(i + 1)).ln()
    })
}

/// `(1 - e^{-x}) / x`, continuous at zero.
pub(crate) fn one_minus_exp_over<T: Scalar>(x: T) -> T {
    if x.abs() < T::lit(1e-8) {
        T::one() - x / T::lit(2.0)
    } else {
        -(-x).exp_m1() / x
    }
}

/// Numerically stable `ln(sum(exp(v)))`.
pub(crate) fn log_sum_exp<T: Scalar>(values: &[T]) -> T {
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    let sum = values.iter().fold(T::zero(), |acc, &v| acc + (v - max).exp());
    max + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_factorial_small_values() {
        assert!((ln_factorial::<f64>(5) - 120f64.ln()).abs() < 1e-14);
        assert_eq!(ln_factorial::<f64>(0), 0.0);
        assert_eq!(ln_factorial::<f64>(1), 0.0);
    }

    #[test]
    fn ln_binomial_matches_pascal() {
        assert!((ln_binomial::<f64>(10, 3) - 120f64.ln()).abs() < 1e-13);
        assert!((ln_binomial::<f64>(20, 10) - 184756f64.ln()).abs() < 1e-12);
        assert_eq!(ln_binomial::<f64>(7, 0), 0.0);
    }

    #[test]
    fn expm1_ratio_is_continuous() {
        let near = one_minus_exp_over(1e-9_f64);
        let at = one_minus_exp_over(0.0_f64);
        assert!((near - at).abs() < 1e-9);
        assert!((one_minus_exp_over(1.0_f64) - (1.0 - (-1f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_handles_large_magnitudes() {
        let v = [1000.0_f64, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
    }
}
