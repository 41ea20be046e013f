use super::Tolerance;
use crate::error::{ModelError, Result};
use crate::scalar::Scalar;

/// Partial sum of a series together with the certified bound on what was left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum<T> {
    pub value: T,
    pub terms: usize,
    pub tail_bound: T,
}

/// Sums `term(0) + term(1) + ...` until `tail_bound(j)`, an upper bound on
/// `|sum_{i >= j} term(i)|`, drops under the tolerance.
///
/// Uses compensated (Neumaier) summation so long series keep full precision.
pub fn sum_truncated<T, F, B>(mut term: F, mut tail_bound: B, tol: &Tolerance<T>) -> Result<SeriesSum<T>>
where
    T: Scalar,
    F: FnMut(usize) -> Result<T>,
    B: FnMut(usize) -> T,
{
    tol.validate()?;
    let mut sum = T::zero();
    let mut comp = T::zero();
    let mut j = 0;
    loop {
        let x = term(j)?;
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp = comp + ((sum - t) + x);
        } else {
            comp = comp + ((x - t) + sum);
        }
        sum = t;
        j += 1;
        let value = sum + comp;
        let tail = tail_bound(j);
        if tail <= tol.threshold(value) {
            return Ok(SeriesSum {
                value,
                terms: j,
                tail_bound: tail,
            });
        }
        if j >= tol.max_terms {
            return Err(ModelError::SeriesNotConverged {
                terms: j,
                tail_bound: tail.to_f64_lossy(),
            });
        }
    }
}
