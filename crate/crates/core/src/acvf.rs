//! Autocovariance functions by three independent routes.
//!
//! - Gegenbauer series: `γ_w(k) = σ² Σ_n C_n C_{n+k} e^{-(2n+k)λ}` for the
//!   core GARTFIMA(0, d, λ, u, 0) process.
//! - Hypergeometric closed form for the u = 1 (ARTFIMA) reduction.
//! - Trapezoidal (FFT) inversion of the exact spectral density; this is the
//!   route for the ARMA-modulated model.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{min_root_modulus, ModelSpec, UNIT_ROOT_TOL};
use crate::numerics::{self, gauss_2f1, gegenbauer_tail_bound, recip_gamma, rising_over_factorial};
use crate::spectrum::spectral_density;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcvfMethod {
    Series,
    Hypergeometric,
    Fft,
}

/// Truncation record of a Gegenbauer-series evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTruncation {
    /// Number of products summed per lag.
    pub terms: usize,
    /// Magnitude of the first omitted coefficient.
    pub tail_bound: f64,
    /// Estimated size of the omitted part of `γ(0)`; infinite when the series diverges.
    pub tail_estimate: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcvfSequence {
    pub values: Vec<f64>,
    pub method: AcvfMethod,
    pub truncation: Option<SeriesTruncation>,
    /// FFT route: max change of any lag when the grid is doubled.
    pub error_estimate: Option<f64>,
    pub warning: Option<String>,
}

impl AcvfSequence {
    pub fn variance(&self) -> f64 {
        self.values[0]
    }

    /// Autocorrelations `γ(h) / γ(0)`.
    pub fn autocorrelations(&self) -> Vec<f64> {
        let g0 = self.values[0];
        self.values.iter().map(|g| g / g0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Hard cap on the number of terms per lag.
    pub max_terms: usize,
    /// Stop once the estimated tail of `γ(0)` falls below this fraction of it.
    pub rel_tol: f64,
    pub min_terms: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { max_terms: 1 << 20, rel_tol: 1e-10, min_terms: 64 }
    }
}

fn check_core(d: f64, lambda: f64, u: f64, sigma2: f64) -> Result<()> {
    if !d.is_finite() || d.abs() >= 0.5 {
        return Err(Error::domain(format!("series acvf needs |d| < 1/2, got d = {d}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if !(u.abs() <= 1.0) {
        return Err(Error::domain(format!("|u| <= 1 required, got u = {u}")));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::domain(format!("sigma2 must be positive, got {sigma2}")));
    }
    if lambda == 0.0 && u.abs() == 1.0 && d >= 0.25 {
        return Err(Error::domain(format!("untempered |u| = 1 needs d < 1/4 for a finite variance, got d = {d}")));
    }
    Ok(())
}

/// Lag products `Σ_{n=0}^{terms-1} b_n b_{n+k}` for `k = 0..=h_max`.
fn lag_products(b: &[f64], terms: usize, lags: &[usize]) -> Vec<f64> {
    let work = |&k: &usize| b[..terms].iter().zip(&b[k..k + terms]).map(|(x, y)| x * y).sum::<f64>();
    if terms * lags.len() > 1 << 18 {
        lags.par_iter().map(work).collect()
    } else {
        lags.iter().map(work).collect()
    }
}

/// Envelope constant `K` and exponent `α` with `|C_n| ≲ K n^α` at λ = 0.
fn untempered_envelope(d: f64, u: f64) -> (f64, f64) {
    if u.abs() == 1.0 {
        (recip_gamma(2.0 * d).abs(), 2.0 * d - 1.0)
    } else {
        (2.0 * recip_gamma(d).abs() / (2.0 * u.acos().sin()).powf(d), d - 1.0)
    }
}

/// `K² Σ_{n>N} n^{2α}`, or infinity when the sum diverges.
fn power_tail(k: f64, alpha: f64, n: usize) -> f64 {
    let e = 2.0 * alpha + 1.0;
    if k == 0.0 {
        0.0
    } else if e >= 0.0 {
        f64::INFINITY
    } else {
        k * k * (n as f64).powf(e) / -e
    }
}

/// Autocovariances of GARTFIMA(0, d, λ, u, 0) by the Gegenbauer series.
pub fn gartfima_core_acvf(d: f64, lambda: f64, u: f64, sigma2: f64, h_max: usize) -> Result<AcvfSequence> {
    gartfima_core_acvf_with(d, lambda, u, sigma2, h_max, &SeriesOptions::default())
}

/// As [`gartfima_core_acvf`] with explicit truncation controls.
///
/// For λ > 0 the number of terms doubles until
/// `tail_bound(N)² / (1 - e^{-2λ}) < rel_tol · Σ_{n≤N} b_n²`. For λ = 0 the
/// sum runs to `max_terms` and carries a warning unless the power-law tail
/// estimate is already below tolerance.
pub fn gartfima_core_acvf_with(
    d: f64,
    lambda: f64,
    u: f64,
    sigma2: f64,
    h_max: usize,
    opts: &SeriesOptions,
) -> Result<AcvfSequence> {
    check_core(d, lambda, u, sigma2)?;
    let lags: Vec<usize> = (0..=h_max).collect();
    if d == 0.0 {
        let mut values = vec![0.0; h_max + 1];
        values[0] = sigma2;
        let truncation = SeriesTruncation { terms: 1, tail_bound: 0.0, tail_estimate: 0.0, converged: true };
        return Ok(AcvfSequence {
            values,
            method: AcvfMethod::Series,
            truncation: Some(truncation),
            error_estimate: None,
            warning: None,
        });
    }
    let r = (-lambda).exp();
    let cap = opts.max_terms.max(1);

    let (b, terms, tail_bound, tail_estimate, converged) = if lambda > 0.0 {
        let denom = -(-2.0 * lambda).exp_m1();
        let mut terms = opts.min_terms.clamp(1, cap);
        loop {
            let b = numerics::tempered_gegenbauer_coeffs(d, u, lambda, terms + h_max)?.values;
            let g0: f64 = b[..terms].iter().map(|x| x * x).sum();
            let tb = gegenbauer_tail_bound(d, u, r, &b[..terms]);
            let tail = tb * tb / denom;
            let ok = tail < opts.rel_tol * g0;
            if ok || terms >= cap {
                break (b, terms, tb, tail, ok);
            }
            terms = (terms * 2).min(cap);
        }
    } else {
        let terms = cap;
        let b = numerics::tempered_gegenbauer_coeffs(d, u, 0.0, terms + h_max)?.values;
        let g0: f64 = b[..terms].iter().map(|x| x * x).sum();
        let tb = gegenbauer_tail_bound(d, u, 1.0, &b[..terms]);
        let (k, alpha) = untempered_envelope(d, u);
        let tail = power_tail(k, alpha, terms);
        let ok = tail < opts.rel_tol * g0;
        (b, terms, tb, tail, ok)
    };

    let values: Vec<f64> = lag_products(&b, terms, &lags).into_iter().map(|s| sigma2 * s).collect();
    let warning = (!converged).then(|| {
        format!("Gegenbauer series truncated at {terms} terms; estimated tail of gamma(0) is {:.3e}", sigma2 * tail_estimate)
    });
    Ok(AcvfSequence {
        values,
        method: AcvfMethod::Series,
        truncation: Some(SeriesTruncation { terms, tail_bound, tail_estimate: sigma2 * tail_estimate, converged }),
        error_estimate: None,
        warning,
    })
}

/// ARTFIMA(0, order, λ, 0) autocovariances in closed form,
/// `γ(h) = σ² e^{-hλ} Γ(order+h)/(Γ(order) h!) 2F1(order, h+order; h+1; e^{-2λ})`.
pub fn artfima_acvf(order: f64, lambda: f64, sigma2: f64, h_max: usize) -> Result<AcvfSequence> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("closed-form ARTFIMA acvf needs lambda > 0, got {lambda}")));
    }
    if !(sigma2 > 0.0) || !order.is_finite() {
        return Err(Error::domain("closed-form ARTFIMA acvf needs finite order and sigma2 > 0"));
    }
    let z = (-2.0 * lambda).exp();
    let values = (0..=h_max)
        .map(|h| {
            let hf = h as f64;
            let ratio = rising_over_factorial(order, h);
            if ratio == 0.0 {
                return Ok(0.0);
            }
            let f = gauss_2f1(order, hf + order, hf + 1.0, z)?;
            Ok(sigma2 * (-hf * lambda).exp() * ratio * f)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(AcvfSequence { values, method: AcvfMethod::Hypergeometric, truncation: None, error_estimate: None, warning: None })
}

fn check_fft_spec(spec: &ModelSpec) -> Result<()> {
    if !(spec.sigma2 > 0.0) || !spec.d.is_finite() || !spec.lambda.is_finite() || !(spec.lambda >= 0.0) {
        return Err(Error::domain("FFT acvf needs finite d, lambda >= 0 and sigma2 > 0"));
    }
    if !(spec.u.abs() <= 1.0) {
        return Err(Error::domain(format!("|u| <= 1 required, got u = {}", spec.u)));
    }
    if spec.lambda == 0.0 && spec.d > 0.0 {
        return Err(Error::domain(
            "spectral density has a pole at lambda = 0 with d > 0; use the Gegenbauer series route",
        ));
    }
    let ar = numerics::ar_polynomial(&spec.ar);
    if min_root_modulus(&ar).is_some_and(|m| m <= 1.0 + UNIT_ROOT_TOL) {
        return Err(Error::domain("AR polynomial has a root on or inside the unit circle"));
    }
    Ok(())
}

fn invert_density(spec: &ModelSpec, n_fft: usize, h_max: usize) -> Result<Vec<f64>> {
    let mut buf = (0..n_fft)
        .map(|k| {
            let w = 2.0 * PI * k as f64 / n_fft as f64;
            let w = if w > PI { w - 2.0 * PI } else { w };
            spectral_density(spec, w).map(|f| Complex::new(f, 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    let scale = 2.0 * PI / n_fft as f64;
    Ok(buf[..=h_max].iter().map(|c| c.re * scale).collect())
}

/// Autocovariances by inverting the spectral density on an `N`-point grid,
/// `N = max(8192, 8 h_max)`. The error estimate compares against `2N`.
pub fn acvf_fft(spec: &ModelSpec, h_max: usize) -> Result<AcvfSequence> {
    check_fft_spec(spec)?;
    let n_fft = 8192.max(8 * h_max);
    let values = invert_density(spec, n_fft, h_max)?;
    let fine = invert_density(spec, 2 * n_fft, h_max)?;
    let err = values.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(AcvfSequence { values, method: AcvfMethod::Fft, truncation: None, error_estimate: Some(err), warning: None })
}

/// Autocovariances of the full ARMA-modulated model.
///
/// Uses [`acvf_fft`] whenever the density is pole-free. For λ = 0 with d > 0
/// the density is not integrable on a grid, so the core series is filtered
/// through the ψ-weights instead: `γ_X(h) = Σ_m c(|m|) γ_W(|h+m|)` with
/// `c(m) = Σ_j ψ_j ψ_{j+m}`.
pub fn full_acvf(spec: &ModelSpec, h_max: usize) -> Result<AcvfSequence> {
    if !(spec.lambda == 0.0 && spec.d > 0.0) {
        return acvf_fft(spec, h_max);
    }
    let ar = numerics::ar_polynomial(&spec.ar);
    if min_root_modulus(&ar).is_some_and(|m| m <= 1.0 + UNIT_ROOT_TOL) {
        return Err(Error::domain("AR polynomial has a root on or inside the unit circle"));
    }
    let psi = psi_until_negligible(&spec.ar, &spec.ma);
    let j = psi.len() - 1;
    let core = gartfima_core_acvf(spec.d, spec.lambda, spec.u, spec.sigma2, h_max + j)?;
    if j == 0 {
        let mut out = core;
        out.values.truncate(h_max + 1);
        return Ok(out);
    }
    let c: Vec<f64> = (0..=j).map(|m| psi[..=j - m].iter().zip(&psi[m..]).map(|(a, b)| a * b).sum()).collect();
    let values = (0..=h_max as i64)
        .map(|h| {
            (-(j as i64)..=j as i64)
                .map(|m| c[m.unsigned_abs() as usize] * core.values[(h + m).unsigned_abs() as usize])
                .sum()
        })
        .collect();
    Ok(AcvfSequence { values, ..core })
}

fn psi_until_negligible(ar: &[f64], ma: &[f64]) -> Vec<f64> {
    if ar.is_empty() {
        return numerics::arma_psi_weights(ar, ma, ma.len()).values;
    }
    let mut n = 64;
    loop {
        let psi = numerics::arma_psi_weights(ar, ma, n).values;
        let peak = psi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tail = psi[n.saturating_sub(ar.len().max(1))..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if tail < 1e-17 * peak || n >= 1 << 16 {
            let last = psi.iter().rposition(|v| v.abs() >= 1e-17 * peak).unwrap_or(0);
            return psi[..=last.max(ma.len())].to_vec();
        }
        n *= 2;
    }
}

/// Diagnostic for absolute summability of the untempered autocovariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub lags: Vec<usize>,
    /// `|γ(H)|` at each lag, i.e. the increment of `Σ|γ(h)|` at `h = H`.
    pub increments: Vec<f64>,
    /// Observed power-law exponent of the Gegenbauer coefficients over the
    /// last two octaves of the truncation window.
    pub coefficient_decay: f64,
    /// Whether `Σ_n C_n C_{n+H}` converges at all (needs `2·decay + 1 < 0`).
    pub series_convergent: bool,
    pub monotone_decrease: bool,
    pub converges: bool,
}

/// Evaluates `|γ(H)|` for the given lags with `max_terms` series terms and
/// checks that the per-lag series converge and the increments decrease.
pub fn summability_diagnostic(
    d: f64,
    lambda: f64,
    u: f64,
    sigma2: f64,
    lags: &[usize],
    max_terms: usize,
) -> Result<SummabilityReport> {
    if !(u.abs() <= 1.0) || !(lambda >= 0.0) || !d.is_finite() {
        return Err(Error::domain("summability diagnostic needs |u| <= 1, lambda >= 0 and finite d"));
    }
    let h_max = lags.iter().copied().max().unwrap_or(0);
    let terms = max_terms.max(16);
    let b = numerics::tempered_gegenbauer_coeffs(d, u, lambda, terms + h_max)?.values;
    let block_max = |lo: usize, hi: usize| b[lo..hi].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let early = block_max(terms / 4, terms / 2);
    let late = block_max(terms / 2, terms);
    let coefficient_decay = if late < f64::MIN_POSITIVE || early < f64::MIN_POSITIVE { f64::NEG_INFINITY } else { (late / early).log2() };
    let series_convergent = 2.0 * coefficient_decay + 1.0 < -0.05;
    let increments: Vec<f64> = lag_products(&b, terms, lags).into_iter().map(|s| (sigma2 * s).abs()).collect();
    let monotone_decrease = increments.windows(2).all(|w| w[1] < w[0] || w[1] == 0.0);
    Ok(SummabilityReport {
        lags: lags.to_vec(),
        increments,
        coefficient_decay,
        series_convergent,
        monotone_decrease,
        converges: series_convergent && monotone_decrease,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_order_is_white_noise() {
        let a = gartfima_core_acvf(0.0, 0.3, 0.4, 1.7, 5).unwrap();
        assert_eq!(a.values, vec![1.7, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn heavy_tempering_kills_memory() {
        let a = gartfima_core_acvf(0.3, 50.0, 0.4, 2.0, 3).unwrap();
        assert!((a.values[0] - 2.0).abs() < 1e-15);
        let rho1 = a.values[1] / a.values[0];
        assert!((rho1 - 2.0 * 0.3 * 0.4 * (-50.0_f64).exp()).abs() < 1e-30);
    }

    #[test]
    fn series_matches_quadrature_reference() {
        // adaptive quadrature of 2∫_0^π f(ω) cos(hω) dω
        let want = [
            1.024_155_743_375_618_456_4,
            0.075_395_981_367_455_833_676,
            -0.128_593_174_739_070_131_8,
            -0.044_549_937_013_964_415_274,
            0.028_039_988_436_180_872_665,
            0.020_949_864_350_581_645_749,
        ];
        let a = gartfima_core_acvf(0.3, 0.4, 0.2, 1.0, 5).unwrap();
        assert!(a.truncation.as_ref().unwrap().converged);
        for (g, w) in a.values.iter().zip(want) {
            assert!((g - w).abs() < 1e-8, "{g} vs {w}");
        }
    }

    #[test]
    fn hypergeometric_reference_value() {
        // high-precision term summation reference
        let a = artfima_acvf(0.4, 0.3, 1.0, 1).unwrap();
        assert!((a.values[0] - 1.125_569_577_026_435_6).abs() < 1e-13);
        assert!((a.values[1] - 0.364_952_883_624_000_75).abs() < 1e-13);
        assert!(artfima_acvf(0.4, 0.0, 1.0, 1).is_err());
        let big = artfima_acvf(0.4, 40.0, 3.0, 0).unwrap();
        assert!((big.values[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ar1_by_fft() {
        let spec = ModelSpec::core(0.0, 0.0, 0.0, 1.5).with_ar(vec![0.6]);
        let a = acvf_fft(&spec, 10).unwrap();
        for h in 0..=10 {
            let want = 1.5 * 0.6_f64.powi(h as i32) / (1.0 - 0.36);
            assert!((a.values[h] - want).abs() < 1e-8);
        }
        assert!(a.error_estimate.unwrap() < 1e-12);
    }

    #[test]
    fn ma1_full_acvf() {
        let spec = ModelSpec::core(0.0, 0.2, 0.5, 2.0).with_ma(vec![0.4]);
        let a = full_acvf(&spec, 4).unwrap();
        assert!((a.values[0] - 2.0 * 1.16).abs() < 1e-12);
        assert!((a.values[1] - 0.8).abs() < 1e-12);
        for h in 2..=4 {
            assert!(a.values[h].abs() < 1e-12);
        }
    }

    #[test]
    fn fft_refuses_poles() {
        let spec = ModelSpec::core(0.2, 0.0, 0.3, 1.0);
        assert!(matches!(acvf_fft(&spec, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn untempered_unit_u_rejects_large_d() {
        assert!(gartfima_core_acvf(0.3, 0.0, 1.0, 1.0, 2).is_err());
    }

    #[test]
    fn untempered_series_flags_truncation() {
        let opts = SeriesOptions { max_terms: 4096, ..Default::default() };
        let a = gartfima_core_acvf_with(0.2, 0.0, 0.3, 1.0, 3, &opts).unwrap();
        let t = a.truncation.unwrap();
        assert_eq!(t.terms, 4096);
        assert!(!t.converged && a.warning.is_some());
    }

    #[test]
    fn full_acvf_series_route_with_ar() {
        let spec = ModelSpec::core(0.2, 0.0, 0.3, 1.0);
        let core = gartfima_core_acvf(0.2, 0.0, 0.3, 1.0, 6).unwrap();
        assert_eq!(core.values, full_acvf(&spec, 6).unwrap().values);

        // AR(1) filter: γ_X(h) = Σ_j Σ_k φ^{j+k} γ_W(h + k - j), by brute force
        let phi: f64 = 0.5;
        let spec = spec.with_ar(vec![phi]);
        let full = full_acvf(&spec, 3).unwrap();
        let jmax = 60usize;
        let w = gartfima_core_acvf(0.2, 0.0, 0.3, 1.0, 3 + jmax).unwrap().values;
        for h in 0..=3i64 {
            let mut want = 0.0;
            for j in 0..=jmax as i64 {
                for k in 0..=jmax as i64 {
                    want += phi.powi((j + k) as i32) * w[(h + k - j).unsigned_abs() as usize];
                }
            }
            assert!((full.values[h as usize] - want).abs() < 1e-12, "h={h}");
        }
    }

    #[test]
    fn summability_separates_regimes() {
        let lags: Vec<usize> = (10..=14).map(|k| 1usize << k).collect();
        let tempered = summability_diagnostic(0.45, 0.05, 1.0, 1.0, &lags, 1 << 16).unwrap();
        assert!(tempered.converges, "{tempered:?}");
        assert!(tempered.monotone_decrease);
        let a = summability_diagnostic(0.2, 0.0, 1.0, 1.0, &lags, 1 << 18).unwrap();
        assert!(a.converges && (a.coefficient_decay - (2.0 * 0.2 - 1.0)).abs() < 0.05);
        let b = summability_diagnostic(0.3, 0.0, 1.0, 1.0, &lags, 1 << 18).unwrap();
        assert!(!b.converges);
        assert!(summability_diagnostic(0.2, 0.0, 1.5, 1.0, &lags, 1 << 10).is_err());
    }
}
