//! Exponential decay fits on a log scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative deviation above which a series is flagged as non-exponential.
pub const NON_EXPONENTIAL_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// `k` in `v(t) ≈ A e^{-k t}`.
    pub rate: f64,
    /// `ln A`.
    pub log_amplitude: f64,
    /// Euclidean norm of the residuals of `ln v`.
    pub residual_norm: f64,
    /// Largest relative deviation `|v_i / v̂_i - 1|` of the data from the fit.
    pub relative_residual: f64,
    pub non_exponential: bool,
}

/// Least-squares slope of `ln(value)` against time.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::Fit(format!("{} times but {} values", times.len(), values.len())));
    }
    if times.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 samples, got {}", times.len())));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Fit(format!("non-positive value {v}")));
    }
    let n = times.len() as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let t_mean = times.iter().sum::<f64>() / n;
    let y_mean = logs.iter().sum::<f64>() / n;
    let sxx: f64 = times.iter().map(|t| (t - t_mean).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all sample times coincide".into()));
    }
    let sxy: f64 = times.iter().zip(&logs).map(|(t, y)| (t - t_mean) * (y - y_mean)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let residuals: Vec<f64> = times.iter().zip(&logs).map(|(t, y)| y - (intercept + slope * t)).collect();
    let residual_norm = residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
    let relative_residual = residuals.iter().map(|r| r.exp_m1().abs()).fold(0.0, f64::max);
    Ok(DecayFit {
        rate: -slope,
        log_amplitude: intercept,
        residual_norm,
        relative_residual,
        non_exponential: relative_residual > NON_EXPONENTIAL_THRESHOLD,
    })
}
