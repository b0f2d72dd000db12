//! Constant threshold that maximizes training accuracy.

use crate::error::{Error, Result};

/// Number of training points classified correctly at log-threshold `t`:
/// `#{class-0 ratios < t} + #{class-1 ratios ≥ t}`.
pub fn threshold_objective(log_ratios0: &[f64], log_ratios1: &[f64], t: f64) -> usize {
    log_ratios0.iter().filter(|&&r| r < t).count() + log_ratios1.iter().filter(|&&r| r >= t).count()
}

/// Log-threshold maximizing [`threshold_objective`] over all reals.
///
/// The objective is piecewise constant with jumps only at observed values, so
/// the observed values plus one point above the maximum cover every level.
/// Among maximizers the smallest candidate is returned.
pub fn tune_threshold(log_ratios0: &[f64], log_ratios1: &[f64]) -> Result<f64> {
    if log_ratios0.is_empty() && log_ratios1.is_empty() {
        return Err(Error::EmptyInput);
    }
    if log_ratios0.iter().chain(log_ratios1).any(|r| !r.is_finite()) {
        return Err(Error::InvalidInput("non-finite log-ratio".into()));
    }
    let mut r0 = log_ratios0.to_vec();
    let mut r1 = log_ratios1.to_vec();
    r0.sort_by(f64::total_cmp);
    r1.sort_by(f64::total_cmp);

    let mut candidates: Vec<f64> = r0.iter().chain(&r1).copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let top = *candidates.last().expect("nonempty");
    candidates.push(top + 1.0);

    let mut best = (0usize, candidates[0]);
    let mut first = true;
    for &t in &candidates {
        let below0 = r0.partition_point(|&r| r < t);
        let above1 = r1.len() - r1.partition_point(|&r| r < t);
        let score = below0 + above1;
        if first || score > best.0 {
            best = (score, t);
            first = false;
        }
    }
    Ok(best.1)
}
