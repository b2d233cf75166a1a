//! Evaluation metrics for regression outputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check(y: &[f64], yhat: &[f64], min_len: usize) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::Shape(format!("{} targets vs {} predictions", y.len(), yhat.len())));
    }
    if y.len() < min_len {
        return Err(Error::Data(format!("need at least {min_len} samples, got {}", y.len())));
    }
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 1)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64)
}

/// `1 − var(y − ŷ) / var(y)`.
pub fn explained_variance(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 2)?;
    let vy = variance(y);
    if vy <= 0.0 {
        return Err(Error::ZeroVariance("target"));
    }
    let e: Vec<f64> = y.iter().zip(yhat).map(|(a, b)| a - b).collect();
    Ok(1.0 - variance(&e) / vy)
}

/// Sample Pearson correlation coefficient.
pub fn spcc(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 2)?;
    let (my, mh) = (mean(y), mean(yhat));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(yhat) {
        let (da, db) = (a - my, b - mh);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 {
        return Err(Error::ZeroVariance("target"));
    }
    if syy <= 0.0 {
        return Err(Error::ZeroVariance("prediction"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 2)?;
    let my = mean(y);
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if ss_tot <= 0.0 {
        return Err(Error::ZeroVariance("target"));
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Least-squares line `ŷ ≈ m·y + b`.
pub fn fit_line(y: &[f64], yhat: &[f64]) -> Result<(f64, f64)> {
    check(y, yhat, 2)?;
    let (my, mh) = (mean(y), mean(yhat));
    let sxx: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::ZeroVariance("target"));
    }
    let sxy: f64 = y.iter().zip(yhat).map(|(a, b)| (a - my) * (b - mh)).sum();
    let m = sxy / sxx;
    Ok((m, mh - m * my))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mse: f64,
    pub score: f64,
    pub spcc: f64,
    pub r_squared: f64,
    pub fit_slope: f64,
    pub fit_intercept: f64,
}

impl MetricReport {
    /// All metrics at once. A constant prediction has no defined correlation;
    /// its `spcc` is reported as 0.
    pub fn compute(y: &[f64], yhat: &[f64]) -> Result<Self> {
        let (fit_slope, fit_intercept) = fit_line(y, yhat)?;
        let spcc = match spcc(y, yhat) {
            Err(Error::ZeroVariance("prediction")) => 0.0,
            other => other?,
        };
        Ok(Self {
            mse: mse(y, yhat)?,
            score: explained_variance(y, yhat)?,
            spcc,
            r_squared: r_squared(y, yhat)?,
            fit_slope,
            fit_intercept,
        })
    }
}
