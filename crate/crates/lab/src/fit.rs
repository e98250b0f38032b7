//! Least-squares power-law fits on log-log axes.

use anyhow::{bail, ensure, Result};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ln n, ln value)` pairs the fit was computed from.
    pub points: Vec<(f64, f64)>,
}

impl RateFit {
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept + self.slope * n.ln()).exp()
    }
}

/// Ordinary least squares of `ln value` on `ln n`.
pub fn fit_loglog_slope(samples: &[(f64, f64)]) -> Result<RateFit> {
    let mut points = Vec::with_capacity(samples.len());
    for &(n, v) in samples {
        if !(v > 0.0 && v.is_finite()) {
            bail!("log-log fit needs positive values, got {v} at n = {n}");
        }
        ensure!(n > 0.0 && n.is_finite(), "log-log fit needs positive n, got {n}");
        points.push((n.ln(), v.ln()));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ensure!(xs.len() >= 2, "log-log fit needs at least two distinct n values");

    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points,
    })
}
