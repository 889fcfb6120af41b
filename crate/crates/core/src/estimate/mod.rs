//! Frequency-domain estimation: log-periodogram nonlinear least squares and
//! the Whittle likelihood, plus order selection and Monte Carlo studies.
//!
//! Both estimators work on the periodogram at the harmonic frequencies
//! `ω_j = 2πj/n`, `j = 1..=⌊n/2⌋`. Zero ordinates are dropped and counted.
//!
//! ARMA coefficients are searched through partial autocorrelations in
//! `(-1, 1)`, which keeps every candidate stationary and invertible.

pub mod optimize;

use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelFamily, ModelSpec};
use crate::simulate::{derive_stream_seed, simulate, SimulationConfig};
use crate::spectrum::{arma_gain, gegenbauer_modulus_sq, periodogram, spectral_shape, Periodogram};

pub use optimize::{optimize, Bound, OptimizeOptions, OptimizeResult};

/// Finite stand-in for the objective at a spectral pole.
pub const POLE_PENALTY: f64 = 1e100;

/// Shortest series accepted by the fitting routines.
pub const MIN_FIT_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Nls,
    Whittle,
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Nls => "nls",
            Estimator::Whittle => "whittle",
        })
    }
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nls" => Ok(Estimator::Nls),
            "whittle" => Ok(Estimator::Whittle),
            _ => Err(Error::domain(format!("unknown estimator '{s}' (expected nls or whittle)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Which parameters are free; the rest are pinned by the family.
    pub family: ModelFamily,
    /// Fraction of the lowest harmonic frequencies entering the NLS sum.
    pub band_frac: f64,
    pub optimizer: OptimizeOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { family: ModelFamily::Gartfima, band_frac: 1.0, optimizer: OptimizeOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub method: Estimator,
    pub family: ModelFamily,
    /// Differencing parameter in the family's own convention: the order of
    /// `(1 - e^{-λ}B)` for ARTFIMA and ARFIMA, the Gegenbauer `d` otherwise.
    pub d_hat: f64,
    pub lambda_hat: f64,
    pub u_hat: f64,
    pub ar_hat: Vec<f64>,
    pub ma_hat: Vec<f64>,
    /// NLS only: estimate of `log f_u(0)`.
    pub intercept_hat: Option<f64>,
    pub sigma2_hat: f64,
    pub objective: f64,
    pub n_freqs_used: usize,
    pub zero_ordinates_dropped: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub evaluations: usize,
}

impl EstimationResult {
    /// The fitted model as a GARTFIMA parameter set.
    pub fn spec(&self) -> ModelSpec {
        let d = match self.family {
            ModelFamily::Artfima | ModelFamily::Arfima => self.d_hat / 2.0,
            _ => self.d_hat,
        };
        ModelSpec {
            ar: self.ar_hat.clone(),
            ma: self.ma_hat.clone(),
            d,
            lambda: self.lambda_hat,
            u: self.u_hat,
            sigma2: self.sigma2_hat,
        }
    }

    /// Estimates in the order of [`parameter_names`].
    pub fn estimates(&self) -> Vec<f64> {
        let mut v = Vec::new();
        let (d, l, u) = free_core(self.family);
        if d {
            v.push(self.d_hat);
        }
        if l {
            v.push(self.lambda_hat);
        }
        if u {
            v.push(self.u_hat);
        }
        v.extend(&self.ar_hat);
        v.extend(&self.ma_hat);
        v
    }
}

// ---------------------------------------------------------------------------
// ARMA partial-autocorrelation parameterisation
// ---------------------------------------------------------------------------

/// AR coefficients `φ` (of `1 - Σ φ_j z^j`) from partial autocorrelations.
pub fn pacf_to_ar(r: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(r.len());
    for (k, &rk) in r.iter().enumerate() {
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - rk * prev[k - 1 - j];
        }
        phi.push(rk);
    }
    phi
}

/// Inverse of [`pacf_to_ar`]; `None` when `φ` is not stationary.
pub fn ar_to_pacf(phi: &[f64]) -> Option<Vec<f64>> {
    let mut cur = phi.to_vec();
    let mut r = vec![0.0; phi.len()];
    for k in (0..phi.len()).rev() {
        let rk = cur[k];
        if !(rk.abs() < 1.0) {
            return None;
        }
        r[k] = rk;
        let denom = 1.0 - rk * rk;
        cur = (0..k).map(|j| (cur[j] + rk * cur[k - 1 - j]) / denom).collect();
    }
    Some(r)
}

fn pacf_to_ma(r: &[f64]) -> Vec<f64> {
    pacf_to_ar(r).into_iter().map(|c| -c).collect()
}

// ---------------------------------------------------------------------------
// Parameter layout per family
// ---------------------------------------------------------------------------

/// Which of (d, λ, u) are free for `family`.
fn free_core(family: ModelFamily) -> (bool, bool, bool) {
    match family {
        ModelFamily::Gartfima => (true, true, true),
        ModelFamily::Artfima => (true, true, false),
        ModelFamily::Arfima => (true, false, false),
        ModelFamily::Garma | ModelFamily::Gegenbauer => (true, false, true),
        ModelFamily::Arma => (false, false, false),
    }
}

/// Names of the free parameters of a (family, p, q) fit.
pub fn parameter_names(family: ModelFamily, p: usize, q: usize) -> Vec<String> {
    let (d, l, u) = free_core(family);
    let mut names = Vec::new();
    if d {
        names.push("d".to_string());
    }
    if l {
        names.push("lambda".to_string());
    }
    if u {
        names.push("u".to_string());
    }
    names.extend((1..=p).map(|i| format!("ar{i}")));
    names.extend((1..=q).map(|i| format!("ma{i}")));
    names
}

/// True values of the free parameters, in the order of [`parameter_names`].
pub fn true_parameters(spec: &ModelSpec, family: ModelFamily, p: usize, q: usize) -> Vec<f64> {
    let (d, l, u) = free_core(family);
    let mut v = Vec::new();
    if d {
        v.push(match family {
            ModelFamily::Artfima | ModelFamily::Arfima => 2.0 * spec.d,
            _ => spec.d,
        });
    }
    if l {
        v.push(spec.lambda);
    }
    if u {
        v.push(spec.u);
    }
    v.extend((0..p).map(|i| spec.ar.get(i).copied().unwrap_or(0.0)));
    v.extend((0..q).map(|i| spec.ma.get(i).copied().unwrap_or(0.0)));
    v
}

struct Layout {
    family: ModelFamily,
    p: usize,
    bounds: Vec<Bound>,
}

impl Layout {
    fn new(family: ModelFamily, p: usize, q: usize) -> Result<Self> {
        if family == ModelFamily::Gegenbauer && (p > 0 || q > 0) {
            return Err(Error::domain("the GEGENBAUER family has no ARMA part"));
        }
        let open = |lo, hi| Bound::Open { lo, hi };
        let (d, l, u) = free_core(family);
        let mut bounds = Vec::new();
        if d {
            bounds.push(match family {
                ModelFamily::Artfima => open(-1.0, 1.0),
                _ => open(-0.5, 0.5),
            });
        }
        if l {
            bounds.push(Bound::NonNegative);
        }
        if u {
            bounds.push(open(-1.0, 1.0));
        }
        bounds.extend(std::iter::repeat_n(open(-1.0, 1.0), p + q));
        Ok(Self { family, p, bounds })
    }

    /// Family-convention (d, λ, u, φ, θ) for the optimiser point `x`.
    fn unpack(&self, x: &[f64]) -> (f64, f64, f64, Vec<f64>, Vec<f64>) {
        let (fd, fl, fu) = free_core(self.family);
        let mut it = x.iter().copied();
        let d = if fd { it.next().unwrap() } else { 0.0 };
        let lambda = if fl { it.next().unwrap() } else { 0.0 };
        let u = if fu {
            it.next().unwrap()
        } else if self.family == ModelFamily::Arma {
            0.0
        } else {
            1.0
        };
        let rest: Vec<f64> = it.collect();
        (d, lambda, u, pacf_to_ar(&rest[..self.p]), pacf_to_ma(&rest[self.p..]))
    }

    fn spec(&self, x: &[f64]) -> ModelSpec {
        let (d, lambda, u, ar, ma) = self.unpack(x);
        let d = match self.family {
            ModelFamily::Artfima | ModelFamily::Arfima => d / 2.0,
            _ => d,
        };
        ModelSpec { ar, ma, d, lambda, u, sigma2: 1.0 }
    }
}

// ---------------------------------------------------------------------------
// Objectives
// ---------------------------------------------------------------------------

/// Periodogram ordinates of a band with zeros removed.
struct Prepared {
    omega: Vec<f64>,
    ord: Vec<f64>,
    log_ord: Vec<f64>,
    dropped: usize,
}

fn prepare(pgram: &Periodogram, band: Range<usize>) -> Result<Prepared> {
    if band.end > pgram.ordinates.len() || band.start >= band.end {
        return Err(Error::domain(format!(
            "frequency band {}..{} is empty or exceeds the {} available ordinates",
            band.start,
            band.end,
            pgram.ordinates.len()
        )));
    }
    let mut p = Prepared { omega: Vec::new(), ord: Vec::new(), log_ord: Vec::new(), dropped: 0 };
    for j in band {
        let v = pgram.ordinates[j];
        if v > 0.0 {
            p.omega.push(pgram.grid.freqs[j]);
            p.ord.push(v);
            p.log_ord.push(v.ln());
        } else {
            p.dropped += 1;
        }
    }
    if p.ord.is_empty() {
        return Err(Error::domain("no positive periodogram ordinates in the frequency band"));
    }
    Ok(p)
}

/// `log I_j + d log G_j - log(h_j / h_0)`; the NLS residual is this minus the intercept.
fn nls_targets(spec: &ModelSpec, data: &Prepared) -> Result<Vec<f64>> {
    let arma = spec.p() > 0 || spec.q() > 0;
    let h0 = if arma { arma_gain(&spec.ar, &spec.ma, 0.0).ln() } else { 0.0 };
    data.omega
        .iter()
        .zip(&data.log_ord)
        .map(|(&w, &li)| {
            let mut y = li;
            if spec.d != 0.0 {
                let g = gegenbauer_modulus_sq(spec.u, spec.lambda, w);
                if !(g > 0.0) {
                    return Err(Error::Pole { omega: w });
                }
                y += spec.d * g.ln();
            }
            if arma {
                y -= arma_gain(&spec.ar, &spec.ma, w).ln() - h0;
            }
            Ok(y)
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sum_sq_dev(v: &[f64], c: f64) -> f64 {
    v.iter().map(|y| (y - c) * (y - c)).sum()
}

/// Sum of squared log-periodogram regression residuals
/// `e_j = log I_j - [c - d log G_j + log(h_j / h_0)]` over `band`, where
/// `h` is the ARMA gain and `G_j = A - B cos ω_j + C cos² ω_j`.
///
/// `spec.sigma2` is ignored; `intercept` plays the role of `log f_u(0)`.
pub fn nls_objective(spec: &ModelSpec, intercept: f64, pgram: &Periodogram, band: Range<usize>) -> Result<f64> {
    let data = prepare(pgram, band)?;
    Ok(sum_sq_dev(&nls_targets(spec, &data)?, intercept))
}

/// Intercept minimising [`nls_objective`] for fixed shape parameters, with the
/// resulting objective value.
pub fn nls_profile(spec: &ModelSpec, pgram: &Periodogram, band: Range<usize>) -> Result<(f64, f64)> {
    let data = prepare(pgram, band)?;
    let y = nls_targets(spec, &data)?;
    let c = mean(&y);
    Ok((c, sum_sq_dev(&y, c)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhittleValue {
    /// `m + m log σ̂² + Σ log g_j - m log 2π`, or [`POLE_PENALTY`].
    pub objective: f64,
    /// `(2π/m) Σ I_j / g_j`.
    pub sigma2_hat: f64,
    pub m: usize,
    /// The density had a pole (or zero) on the grid.
    pub penalized: bool,
}

fn whittle_value(spec: &ModelSpec, data: &Prepared) -> WhittleValue {
    let m = data.ord.len();
    let mut ratio = 0.0;
    let mut log_g = 0.0;
    for (&w, &i) in data.omega.iter().zip(&data.ord) {
        let g = match spectral_shape(spec, w) {
            Ok(g) if g > 0.0 && g.is_finite() => g,
            _ => return WhittleValue { objective: POLE_PENALTY, sigma2_hat: f64::NAN, m, penalized: true },
        };
        ratio += i / g;
        log_g += g.ln();
    }
    let mf = m as f64;
    let sigma2_hat = 2.0 * PI * ratio / mf;
    let objective = mf + mf * sigma2_hat.ln() + log_g - mf * (2.0 * PI).ln();
    WhittleValue { objective, sigma2_hat, m, penalized: false }
}

/// Whittle objective `Σ [I_j/f_j + log f_j]` with `σ²` profiled out.
/// `spec.sigma2` is ignored.
pub fn whittle_objective(spec: &ModelSpec, pgram: &Periodogram) -> Result<WhittleValue> {
    let data = prepare(pgram, 0..pgram.ordinates.len())?;
    Ok(whittle_value(spec, &data))
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

fn check_fit_input(series: &[f64], opts: &FitOptions) -> Result<()> {
    if series.len() < MIN_FIT_LEN {
        return Err(Error::domain(format!(
            "estimation needs at least {MIN_FIT_LEN} observations, got {}",
            series.len()
        )));
    }
    if !(opts.band_frac > 0.0 && opts.band_frac <= 1.0) {
        return Err(Error::domain(format!("band fraction must lie in (0, 1], got {}", opts.band_frac)));
    }
    Ok(())
}

/// Fits with either estimator.
pub fn fit(series: &[f64], p: usize, q: usize, method: Estimator, opts: &FitOptions) -> Result<EstimationResult> {
    match method {
        Estimator::Nls => nls_fit(series, p, q, opts),
        Estimator::Whittle => whittle_fit(series, p, q, opts),
    }
}

/// Log-periodogram nonlinear least squares with a free intercept.
pub fn nls_fit(series: &[f64], p: usize, q: usize, opts: &FitOptions) -> Result<EstimationResult> {
    check_fit_input(series, opts)?;
    let pgram = periodogram(series)?;
    let band = pgram.band(opts.band_frac);
    let layout = Layout::new(opts.family, p, q)?;
    let data = prepare(&pgram, band.clone())?;
    let objective = |x: &[f64]| match nls_targets(&layout.spec(x), &data) {
        Ok(y) => sum_sq_dev(&y, mean(&y)),
        Err(_) => POLE_PENALTY,
    };
    let opt = optimize(objective, &layout.bounds, None, &opts.optimizer);
    let spec = layout.spec(&opt.x);
    let (intercept, value) = match nls_profile(&spec, &pgram, band) {
        Ok(v) => v,
        Err(_) => (f64::NAN, POLE_PENALTY),
    };
    let full = prepare(&pgram, 0..pgram.ordinates.len())?;
    let sigma2_hat = whittle_value(&spec, &full).sigma2_hat;
    Ok(assemble(Estimator::Nls, &layout, &opt, Some(intercept), sigma2_hat, value, &data))
}

/// Whittle likelihood with `σ²` profiled out.
pub fn whittle_fit(series: &[f64], p: usize, q: usize, opts: &FitOptions) -> Result<EstimationResult> {
    check_fit_input(series, opts)?;
    let pgram = periodogram(series)?;
    let layout = Layout::new(opts.family, p, q)?;
    let data = prepare(&pgram, 0..pgram.ordinates.len())?;
    let objective = |x: &[f64]| whittle_value(&layout.spec(x), &data).objective;
    let opt = optimize(objective, &layout.bounds, None, &opts.optimizer);
    let w = whittle_value(&layout.spec(&opt.x), &data);
    Ok(assemble(Estimator::Whittle, &layout, &opt, None, w.sigma2_hat, w.objective, &data))
}

fn assemble(
    method: Estimator,
    layout: &Layout,
    opt: &OptimizeResult,
    intercept_hat: Option<f64>,
    sigma2_hat: f64,
    objective: f64,
    data: &Prepared,
) -> EstimationResult {
    let (d_hat, lambda_hat, u_hat, ar_hat, ma_hat) = layout.unpack(&opt.x);
    EstimationResult {
        method,
        family: layout.family,
        d_hat,
        lambda_hat,
        u_hat,
        ar_hat,
        ma_hat,
        intercept_hat,
        sigma2_hat,
        objective,
        n_freqs_used: data.ord.len(),
        zero_ordinates_dropped: data.dropped,
        converged: opt.converged && objective < POLE_PENALTY,
        restarts_used: opt.starts,
        evaluations: opt.evaluations,
    }
}

// ---------------------------------------------------------------------------
// Order selection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCandidate {
    pub p: usize,
    pub q: usize,
    pub objective: f64,
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSelection {
    pub p: usize,
    pub q: usize,
    /// Every candidate, best first.
    pub candidates: Vec<OrderCandidate>,
}

/// Largest AR or MA order accepted by [`select_orders`].
pub const MAX_ORDER: usize = 5;

/// Grid search over `p ≤ p_max`, `q ≤ q_max` minimising
/// `2(p + q + 3) + 2 · (profiled Whittle objective)`. Ties go to the smaller
/// `p + q`, then the smaller `p`.
pub fn select_orders(series: &[f64], p_max: usize, q_max: usize, opts: &FitOptions) -> Result<OrderSelection> {
    if p_max > MAX_ORDER || q_max > MAX_ORDER {
        return Err(Error::domain(format!("orders are limited to {MAX_ORDER}, got p_max = {p_max}, q_max = {q_max}")));
    }
    let grid: Vec<(usize, usize)> = (0..=p_max).flat_map(|p| (0..=q_max).map(move |q| (p, q))).collect();
    let mut candidates = grid
        .par_iter()
        .map(|&(p, q)| {
            let r = whittle_fit(series, p, q, opts)?;
            let k = (p + q + 3) as f64;
            Ok(OrderCandidate { p, q, objective: r.objective, aic: 2.0 * k + 2.0 * r.objective })
        })
        .collect::<Result<Vec<_>>>()?;
    candidates.sort_by(|a, b| a.aic.total_cmp(&b.aic).then((a.p + a.q).cmp(&(b.p + b.q))).then(a.p.cmp(&b.p)));
    Ok(OrderSelection { p: candidates[0].p, q: candidates[0].q, candidates })
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub replications: usize,
    pub method: Estimator,
    /// Orders fitted in every replication.
    pub p: usize,
    pub q: usize,
    pub base_seed: u64,
    pub burnin: usize,
    pub trunc_len: usize,
    pub fit: FitOptions,
}

impl MonteCarloConfig {
    pub fn new(n: usize, replications: usize, method: Estimator, base_seed: u64) -> Self {
        let sim = SimulationConfig::new(n, base_seed);
        Self {
            n,
            replications,
            method,
            p: 0,
            q: 0,
            base_seed,
            burnin: sim.burnin,
            trunc_len: sim.trunc_len,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme observations within 1.5 IQR of the hinges.
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers_low: usize,
    pub outliers_high: usize,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Box-plot statistics with Tukey hinges; `None` for an empty sample.
pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let q1 = median_sorted(&v[..n.div_ceil(2)]);
    let q3 = median_sorted(&v[n / 2..]);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = v.iter().copied().filter(|x| *x >= lo && *x <= hi).collect();
    Some(BoxStats {
        min: v[0],
        q1,
        median: median_sorted(&v),
        q3,
        max: v[n - 1],
        lower_whisker: inside.first().copied().unwrap_or(q1),
        upper_whisker: inside.last().copied().unwrap_or(q3),
        outliers_low: v.iter().filter(|x| **x < lo).count(),
        outliers_high: v.iter().filter(|x| **x > hi).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: usize,
    pub seed: u64,
    /// Estimates in the order of the summary's parameters; empty on failure.
    pub estimates: Vec<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub truth: f64,
    /// Successful replications only, in replication order.
    pub estimates: Vec<f64>,
    pub stats: Option<BoxStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub method: Estimator,
    pub family: ModelFamily,
    pub parameters: Vec<ParameterSummary>,
    pub replications: Vec<ReplicationRecord>,
    pub failures: usize,
    pub not_converged: usize,
}

impl MonteCarloSummary {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

/// Simulates `config.replications` paths of `truth` and fits each one.
///
/// Replication `r` uses seed `base_seed ^ r`, so results do not depend on
/// scheduling. Failed replications are recorded and counted.
pub fn monte_carlo(truth: &ModelSpec, config: &MonteCarloConfig) -> Result<MonteCarloSummary> {
    if config.replications < 2 {
        return Err(Error::domain(format!("a Monte Carlo study needs at least 2 replications, got {}", config.replications)));
    }
    truth.ensure_valid_reduced()?;
    let family = config.fit.family;
    let names = parameter_names(family, config.p, config.q);
    let truths = true_parameters(truth, family, config.p, config.q);

    let records: Vec<ReplicationRecord> = (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let seed = derive_stream_seed(config.base_seed, r as u64);
            let sim = SimulationConfig { n: config.n, seed, burnin: config.burnin, trunc_len: config.trunc_len };
            let outcome = simulate(truth, &sim).and_then(|x| fit(&x, config.p, config.q, config.method, &config.fit));
            match outcome {
                Ok(res) => ReplicationRecord { index: r, seed, estimates: res.estimates(), converged: res.converged, error: None },
                Err(e) => ReplicationRecord { index: r, seed, estimates: Vec::new(), converged: false, error: Some(e.to_string()) },
            }
        })
        .collect();

    let parameters = names
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let estimates: Vec<f64> = records.iter().filter(|r| r.error.is_none()).map(|r| r.estimates[k]).collect();
            let stats = box_stats(&estimates);
            ParameterSummary { name, truth: truths[k], estimates, stats }
        })
        .collect();
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    let not_converged = records.iter().filter(|r| r.error.is_none() && !r.converged).count();
    Ok(MonteCarloSummary { method: config.method, family, parameters, replications: records, failures, not_converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{harmonic_grid, spectral_density};

    fn exact_pgram(spec: &ModelSpec, n: usize) -> Periodogram {
        let grid = harmonic_grid(n).unwrap();
        let ordinates = grid.freqs.iter().map(|&w| spectral_density(spec, w).unwrap()).collect();
        Periodogram { grid, ordinates }
    }

    #[test]
    fn pacf_round_trip() {
        let r = [0.5, -0.3, 0.2];
        let phi = pacf_to_ar(&r);
        let back = ar_to_pacf(&phi).unwrap();
        for (a, b) in r.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(pacf_to_ar(&[0.4]), vec![0.4]);
        // AR(2) from (r1, r2): φ1 = r1(1 - r2), φ2 = r2
        let phi = pacf_to_ar(&[0.5, 0.2]);
        assert!((phi[0] - 0.4).abs() < 1e-15 && (phi[1] - 0.2).abs() < 1e-15);
        assert!(ar_to_pacf(&[1.2]).is_none());
    }

    #[test]
    fn nls_objective_flat_model() {
        let x: Vec<f64> = (0..128).map(|t| ((t * 37 % 11) as f64).sin()).collect();
        let pg = periodogram(&x).unwrap();
        let band = 0..pg.ordinates.len();
        let spec = ModelSpec::core(0.0, 0.3, 0.2, 1.0);
        let (c, v) = nls_profile(&spec, &pg, band.clone()).unwrap();
        let logs: Vec<f64> = pg.ordinates.iter().map(|v| v.ln()).collect();
        assert!((c - mean(&logs)).abs() < 1e-12);
        assert!((v - nls_objective(&spec, c, &pg, band.clone()).unwrap()).abs() < 1e-12);
        assert!(nls_objective(&spec, c + 0.1, &pg, band).unwrap() > v);
    }

    #[test]
    fn nls_objective_vanishes_on_exact_density() {
        let spec = ModelSpec::core(0.4, 0.2, 0.1, 2.0);
        let pg = exact_pgram(&spec, 512);
        let c = (spec.sigma2 / (2.0 * PI)).ln();
        let v = nls_objective(&spec, c, &pg, 0..pg.ordinates.len()).unwrap();
        assert!(v < 1e-18, "{v}");
        let arma = spec.clone().with_ar(vec![0.5]);
        let pg = exact_pgram(&arma, 512);
        let c = (arma.sigma2 / (2.0 * PI) * arma_gain(&arma.ar, &[], 0.0)).ln();
        assert!(nls_objective(&arma, c, &pg, 0..pg.ordinates.len()).unwrap() < 1e-18);
    }

    #[test]
    fn whittle_recovers_sigma2_on_flat_data() {
        let spec = ModelSpec::core(0.0, 0.0, 0.0, 3.0);
        let pg = exact_pgram(&spec, 200);
        let w = whittle_objective(&spec, &pg).unwrap();
        assert!((w.sigma2_hat - 3.0).abs() < 1e-14);
        let m = 100.0;
        let want = m + m * 3.0_f64.ln() - m * (2.0 * PI).ln();
        assert!((w.objective - want).abs() < 1e-10);
        assert!(!w.penalized);
    }

    #[test]
    fn whittle_penalizes_pole_on_grid() {
        let n = 64;
        let w0 = 2.0 * PI * 8.0 / n as f64;
        let spec = ModelSpec::core(0.3, 0.0, w0.cos(), 1.0);
        let pg = exact_pgram(&ModelSpec::core(0.0, 0.0, 0.0, 1.0), n);
        let w = whittle_objective(&spec, &pg).unwrap();
        assert!(w.penalized && w.objective == POLE_PENALTY);
        assert!(matches!(nls_objective(&spec, 0.0, &pg, 0..pg.ordinates.len()), Err(Error::Pole { .. })));
    }

    #[test]
    fn zero_ordinates_dropped() {
        let grid = harmonic_grid(16).unwrap();
        let mut ordinates = vec![1.0; grid.len()];
        ordinates[2] = 0.0;
        let pg = Periodogram { grid, ordinates };
        let w = whittle_objective(&ModelSpec::core(0.0, 0.0, 0.0, 1.0), &pg).unwrap();
        assert_eq!(w.m, 7);
        let all_zero = Periodogram { grid: pg.grid.clone(), ordinates: vec![0.0; 8] };
        assert!(whittle_objective(&ModelSpec::core(0.0, 0.0, 0.0, 1.0), &all_zero).is_err());
    }

    #[test]
    fn box_stats_two_points() {
        let s = box_stats(&[3.0, 1.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (1.0, 2.0, 3.0));
        let s = box_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (2.0, 3.0, 4.0));
        assert_eq!(s.outliers_high, 1);
        assert_eq!(s.upper_whisker, 4.0);
        assert!(box_stats(&[]).is_none());
    }

    #[test]
    fn layout_maps_families() {
        let l = Layout::new(ModelFamily::Artfima, 0, 0).unwrap();
        let s = l.spec(&[0.4, 0.2]);
        assert_eq!((s.d, s.lambda, s.u), (0.2, 0.2, 1.0));
        let l = Layout::new(ModelFamily::Garma, 1, 1).unwrap();
        let s = l.spec(&[0.3, 0.5, 0.4, 0.6]);
        assert_eq!((s.d, s.lambda, s.u, s.ar.clone(), s.ma.clone()), (0.3, 0.0, 0.5, vec![0.4], vec![-0.6]));
        assert!(Layout::new(ModelFamily::Gegenbauer, 1, 0).is_err());
        assert_eq!(parameter_names(ModelFamily::Gartfima, 1, 0), vec!["d", "lambda", "u", "ar1"]);
    }

    #[test]
    fn fit_rejects_short_series() {
        let x = vec![0.0; 10];
        assert!(nls_fit(&x, 0, 0, &FitOptions::default()).is_err());
        assert!(select_orders(&vec![0.0; 100], 6, 0, &FitOptions::default()).is_err());
    }

    #[test]
    fn monte_carlo_needs_two_replications() {
        let cfg = MonteCarloConfig::new(100, 1, Estimator::Nls, 1);
        assert!(monte_carlo(&ModelSpec::core(0.2, 0.2, 0.1, 1.0), &cfg).is_err());
    }
}
