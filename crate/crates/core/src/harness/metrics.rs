use crate::error::{Error, Result};

/// Sorted estimates paired positionally with sorted truth. `None` when the
/// counts differ.
fn paired_errors(estimate: &[f64], truth: &[f64]) -> Option<Vec<f64>> {
    if estimate.len() != truth.len() {
        return None;
    }
    let mut e = estimate.to_vec();
    let mut t = truth.to_vec();
    e.sort_by(f64::total_cmp);
    t.sort_by(f64::total_cmp);
    Some(e.iter().zip(&t).map(|(a, b)| a - b).collect())
}

/// `10 log10 √(mean squared pairing error)` over all trials and sources.
/// Exact estimates give `-∞`.
pub fn rmse_db(estimates: &[Vec<f64>], truth: &[f64]) -> Result<f64> {
    if estimates.is_empty() || truth.is_empty() {
        return Err(Error::EmptyMetrics);
    }
    let mut sum = 0.0;
    for est in estimates {
        let errs = paired_errors(est, truth).ok_or_else(|| {
            Error::Dimension(format!("{} estimates for {} sources", est.len(), truth.len()))
        })?;
        sum += errs.iter().map(|e| e * e).sum::<f64>();
    }
    let mse = sum / (estimates.len() * truth.len()) as f64;
    Ok(10.0 * mse.sqrt().log10())
}

/// Whether every paired error is within `δ/2` (inclusive).
pub fn is_detected(estimate: &[f64], truth: &[f64], grid_size: f64) -> bool {
    match paired_errors(estimate, truth) {
        Some(errs) => errs.iter().all(|e| e.abs() <= 0.5 * grid_size),
        None => false,
    }
}

/// Fraction of trials whose estimates all fall within `δ/2` of the truth.
/// `None` marks a failed trial.
pub fn pcd(estimates: &[Option<Vec<f64>>], truth: &[f64], grid_size: f64) -> f64 {
    if estimates.is_empty() {
        return 0.0;
    }
    let hits = estimates
        .iter()
        .filter(|e| e.as_deref().is_some_and(|e| is_detected(e, truth, grid_size)))
        .count();
    hits as f64 / estimates.len() as f64
}

/// CSV spelling of an RMSE value: `exact` for `-∞`, empty when missing.
pub fn format_rmse(value: Option<f64>) -> String {
    match value {
        Some(v) if v == f64::NEG_INFINITY => "exact".to_string(),
        Some(v) => v.to_string(),
        None => String::new(),
    }
}
