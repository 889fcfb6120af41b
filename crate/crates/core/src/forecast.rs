//! AR(∞) weights, rolling one-step forecasts and RMSE model comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{fit, EstimationResult, Estimator, FitOptions};
use crate::model::{min_root_modulus, ModelFamily, ModelSpec, UNIT_ROOT_TOL};
use crate::numerics::{self, CoeffSeq};

/// Shortest series accepted by [`one_step_forecasts`].
pub const MIN_FORECAST_LEN: usize = 40;

/// Default cap on the number of π-weights.
pub const DEFAULT_TRUNC: usize = 1000;

fn check_invertible(spec: &ModelSpec) -> Result<()> {
    if !(spec.d > -0.5) {
        return Err(Error::domain(format!("AR(∞) expansion needs d > -1/2, got d = {}", spec.d)));
    }
    if let Some(m) = min_root_modulus(&numerics::ma_polynomial(&spec.ma)) {
        if m <= 1.0 + UNIT_ROOT_TOL {
            return Err(Error::domain(format!("MA polynomial is not invertible (root modulus {m})")));
        }
    }
    Ok(())
}

/// Coefficients `π_0 = 1, π_1, ..., π_M` of
/// `π(z) = (1 - 2ue^{-λ}z + e^{-2λ}z²)^d Φ(z) / Θ(z)`.
pub fn pi_weights(spec: &ModelSpec, m: usize) -> Result<CoeffSeq> {
    check_invertible(spec)?;
    let g = numerics::tempered_gegenbauer_coeffs(-spec.d, spec.u, spec.lambda, m)?;
    let num = numerics::convolve(&g.values, &numerics::ar_polynomial(&spec.ar), m + 1);
    let pi = numerics::series_divide(&num, &numerics::ma_polynomial(&spec.ma), m + 1);
    let tail = if spec.q() == 0 && spec.p() == 0 { g.tail_bound } else { pi[m].abs().max(g.tail_bound) };
    Ok(CoeffSeq::new(pi, tail))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastOptions {
    /// Fraction of the series used as the training segment.
    pub split_frac: f64,
    /// Subtract the training mean before forecasting and add it back after.
    pub demean: bool,
    /// Number of π-weights; `None` means `min(train length, 1000)`.
    pub trunc_len: Option<usize>,
}

impl Default for ForecastOptions {
    fn default() -> Self {
        Self { split_frac: 0.75, demean: true, trunc_len: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    /// Length of the training segment; the test segment starts at this index.
    pub split_index: usize,
    pub train_mean: f64,
    pub trunc_len: usize,
    pub actual: Vec<f64>,
    pub predictions: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rmse: f64,
    pub residual_mean: f64,
    pub residual_variance: f64,
}

/// Index splitting `n` observations at `frac`; both parts are non-empty.
pub fn split_index(n: usize, frac: f64) -> Result<usize> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::domain(format!("split fraction must lie in (0, 1), got {frac}")));
    }
    let k = (n as f64 * frac).floor() as usize;
    if k == 0 || k >= n {
        return Err(Error::domain(format!("split fraction {frac} leaves an empty segment of {n} observations")));
    }
    Ok(k)
}

/// Rolling one-step predictions over the test segment,
/// `X̂_t = -Σ_{j=1}^{min(t, M)} π_j X_{t-j}`, with parameters held fixed.
pub fn one_step_forecasts(spec: &ModelSpec, series: &[f64], opts: &ForecastOptions) -> Result<ForecastReport> {
    let n = series.len();
    if n < MIN_FORECAST_LEN {
        return Err(Error::domain(format!("forecasting needs at least {MIN_FORECAST_LEN} observations, got {n}")));
    }
    if let Some(i) = series.iter().position(|x| !x.is_finite()) {
        return Err(Error::domain(format!("non-finite observation at index {i}")));
    }
    let split = split_index(n, opts.split_frac)?;
    let m = opts.trunc_len.unwrap_or(split.min(DEFAULT_TRUNC)).max(1);
    let pi = pi_weights(spec, m)?.values;

    let train_mean = if opts.demean { series[..split].iter().sum::<f64>() / split as f64 } else { 0.0 };
    let y: Vec<f64> = series.iter().map(|x| x - train_mean).collect();

    let predictions: Vec<f64> = (split..n)
        .map(|t| {
            let s: f64 = (1..=t.min(m)).map(|j| pi[j] * y[t - j]).sum();
            train_mean - s
        })
        .collect();
    let actual = series[split..].to_vec();
    let residuals: Vec<f64> = actual.iter().zip(&predictions).map(|(a, p)| a - p).collect();
    let k = residuals.len() as f64;
    let residual_mean = residuals.iter().sum::<f64>() / k;
    let residual_variance = residuals.iter().map(|r| (r - residual_mean).powi(2)).sum::<f64>() / k;
    let rmse = (residuals.iter().map(|r| r * r).sum::<f64>() / k).sqrt();
    Ok(ForecastReport {
        split_index: split,
        train_mean,
        trunc_len: m,
        actual,
        predictions,
        residuals,
        rmse,
        residual_mean,
        residual_variance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub family: ModelFamily,
    pub p: usize,
    pub q: usize,
}

impl Candidate {
    pub fn new(family: ModelFamily, p: usize, q: usize) -> Self {
        Self { family, p, q }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub method: Estimator,
    pub forecast: ForecastOptions,
    /// Optimiser and band settings; the family is taken from each candidate.
    pub fit: FitOptions,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { method: Estimator::Whittle, forecast: ForecastOptions::default(), fit: FitOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub candidate: Candidate,
    pub fit: Option<EstimationResult>,
    pub rmse: Option<f64>,
    pub error: Option<String>,
}

impl ComparisonRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

fn evaluate(series: &[f64], split: usize, c: Candidate, opts: &CompareOptions) -> Result<(EstimationResult, f64)> {
    let fit_opts = FitOptions { family: c.family, ..opts.fit };
    let est = fit(&series[..split], c.p, c.q, opts.method, &fit_opts)?;
    let report = one_step_forecasts(&est.spec(), series, &opts.forecast)?;
    Ok((est, report.rmse))
}

/// Fits every candidate on the training segment and ranks by test RMSE.
/// Failed candidates are kept, flagged, and sorted last.
pub fn compare_models(series: &[f64], candidates: &[Candidate], opts: &CompareOptions) -> Result<Vec<ComparisonRow>> {
    if candidates.is_empty() {
        return Err(Error::domain("model comparison needs at least one candidate"));
    }
    let split = split_index(series.len(), opts.forecast.split_frac)?;
    let mut rows: Vec<ComparisonRow> = candidates
        .par_iter()
        .map(|&c| match evaluate(series, split, c, opts) {
            Ok((est, rmse)) => ComparisonRow { candidate: c, fit: Some(est), rmse: Some(rmse), error: None },
            Err(e) => ComparisonRow { candidate: c, fit: None, rmse: None, error: Some(e.to_string()) },
        })
        .collect();
    rows.sort_by(|a, b| {
        let key = |r: &ComparisonRow| r.rmse.unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b))
    });
    Ok(rows)
}
