use std::collections::BTreeMap;

use churncov_core::Category;

use crate::engine::SimResult;
use crate::error::SimError;

/// Warm-up share dropped by default.
pub const DEFAULT_DISCARD: f64 = 0.1;

/// Number of batches used for the standard error.
const BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryStat {
    pub count: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageStats {
    pub count: usize,
    pub mean: f64,
    pub mean_normalized: f64,
    /// Batch-means standard error of `mean`; coverages of neighbouring
    /// messages are correlated, so the naive estimate would be too small.
    pub std_error: f64,
    pub per_category: BTreeMap<Category, CategoryStat>,
}

/// Summary over the counted messages after dropping the first
/// `discard_fraction` of them.
pub fn coverage_stats(result: &SimResult, discard_fraction: f64) -> Result<CoverageStats, SimError> {
    if !(0.0..1.0).contains(&discard_fraction) {
        return Err(SimError::InvalidConfig(format!("discard fraction {discard_fraction}")));
    }
    let counted: Vec<_> = result.counted().collect();
    let skip = (counted.len() as f64 * discard_fraction).floor() as usize;
    let window = &counted[skip..];
    if window.is_empty() {
        return Err(SimError::EmptyWindow);
    }
    let values: Vec<f64> = window.iter().map(|m| m.coverage as f64).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut per_category: BTreeMap<Category, CategoryStat> = BTreeMap::new();
    for m in window {
        if let Some(cat) = m.category {
            let e = per_category.entry(cat).or_insert(CategoryStat { count: 0, mean: 0.0 });
            e.count += 1;
            e.mean += m.coverage as f64;
        }
    }
    for e in per_category.values_mut() {
        e.mean /= e.count as f64;
    }
    Ok(CoverageStats {
        count: values.len(),
        mean,
        mean_normalized: mean / result.n_peers as f64,
        std_error: batch_std_error(&values, mean),
        per_category,
    })
}

fn batch_std_error(values: &[f64], mean: f64) -> f64 {
    let n = values.len();
    if n < 2 * BATCHES {
        if n < 2 {
            return 0.0;
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        return (var / n as f64).sqrt();
    }
    let size = n / BATCHES;
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(BATCHES)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    (var / BATCHES as f64).sqrt()
}

/// Mean and standard error of per-trial values.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
