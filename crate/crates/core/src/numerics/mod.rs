//! Numerical kernels shared by the coverage models: Erlang/Poisson densities,
//! adaptive quadrature on bounded intervals and on `[0, inf)`, and truncated
//! infinite series that only return once the remainder is certified.

mod erlang;
mod quadrature;
mod series;

pub use erlang::{erlang_pdf, poisson_excess, Erlang};
pub use quadrature::{integrate, integrate_graded, integrate_halfline, integrate_halfline_graded, Feature, Integral};
pub use series::{sum_truncated, SeriesSum};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Accuracy targets and work budgets for quadrature and series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_terms: usize,
    pub max_subdivisions: usize,
}

impl<T: Scalar> Default for Tolerance<T> {
    fn default() -> Self {
        Self::new(T::lit(1e-10), T::lit(1e-9), 1_000_000, 1 << 15)
    }
}

impl<T: Scalar> Tolerance<T> {
    /// Builds a tolerance, raising each nonzero target to what the scalar type can resolve.
    pub fn new(abs_tol: T, rel_tol: T, max_terms: usize, max_subdivisions: usize) -> Self {
        let floor = T::epsilon() * T::lit(64.0);
        let lift = |x: T| if x > T::zero() { x.max(floor) } else { x };
        Self {
            abs_tol: lift(abs_tol),
            rel_tol: lift(rel_tol),
            max_terms,
            max_subdivisions,
        }
    }

    /// Tight targets used internally by the coverage models.
    pub fn fine() -> Self {
        Self::new(T::lit(1e-14), T::lit(1e-12), 1_000_000, 1 << 15)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: T| x >= T::zero() && x.is_finite();
        if !ok(self.abs_tol) || !ok(self.rel_tol) {
            return Err(invalid("tolerances must be finite and nonnegative"));
        }
        if self.abs_tol == T::zero() && self.rel_tol == T::zero() {
            return Err(invalid("at least one of abs_tol/rel_tol must be positive"));
        }
        if self.max_terms == 0 || self.max_subdivisions == 0 {
            return Err(invalid("work budgets must be positive"));
        }
        Ok(())
    }

    /// Acceptable error for a quantity of magnitude `|value|`.
    #[inline]
    pub fn threshold(&self, value: T) -> T {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}
