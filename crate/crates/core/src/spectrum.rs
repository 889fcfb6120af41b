//! Spectral densities, harmonic frequency grids and periodograms.
//!
//! Densities are normalised as `σ²/(2π) · |Ψ(e^{-iω})|²` on `[-π, π]`, so that
//! `∫ f = γ(0)`. The Gegenbauer factor `|1 - 2u e^{-(λ+iω)} + e^{-2(λ+iω)}|²`
//! is evaluated in the factored form
//! `[(1-r)² + 4r sin²((ω-φ)/2)] · [(1-r)² + 4r sin²((ω+φ)/2)]`
//! with `r = e^{-λ}` and `u = cos φ`, which equals `A - B cos ω + C cos² ω`
//! but keeps full relative precision next to the pole.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Harmonic frequencies `ω_j = 2πj/n`, `j = 1..=⌊n/2⌋`.
///
/// `j = 0` is left out: the demeaned periodogram vanishes there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub n: usize,
    pub freqs: Vec<f64>,
}

impl FrequencyGrid {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

pub fn harmonic_grid(n: usize) -> Result<FrequencyGrid> {
    if n < 4 {
        return Err(Error::domain(format!("harmonic grid needs n >= 4, got {n}")));
    }
    let freqs = (1..=n / 2).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    Ok(FrequencyGrid { n, freqs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    pub grid: FrequencyGrid,
    pub ordinates: Vec<f64>,
}

impl Periodogram {
    /// Indices `0..count` of the lowest `frac` of the grid (at least one).
    pub fn band(&self, frac: f64) -> std::ops::Range<usize> {
        let m = self.ordinates.len();
        let k = ((frac.clamp(0.0, 1.0) * m as f64).floor() as usize).clamp(1, m);
        0..k
    }
}

fn check_series(series: &[f64]) -> Result<f64> {
    if series.len() < 4 {
        return Err(Error::domain(format!("periodogram needs at least 4 observations, got {}", series.len())));
    }
    if let Some(i) = series.iter().position(|x| !x.is_finite()) {
        return Err(Error::domain(format!("non-finite observation at index {i}")));
    }
    Ok(series.iter().sum::<f64>() / series.len() as f64)
}

/// Periodogram `|DFT(x - x̄)|² / (2πn)` on the harmonic grid.
pub fn periodogram(series: &[f64]) -> Result<Periodogram> {
    let mean = check_series(series)?;
    let n = series.len();
    let grid = harmonic_grid(n)?;
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (2.0 * PI * n as f64);
    let ordinates = (1..=grid.len()).map(|j| buf[j].norm_sqr() * scale).collect();
    Ok(Periodogram { grid, ordinates })
}

/// Periodogram from sample autocovariances,
/// `I(ω) = (R(0) + 2 Σ_{s≥1} R(s) cos(sω)) / (2π)`. Quadratic in `n`; the DFT
/// route in [`periodogram`] is the production path.
pub fn periodogram_cosine_sum(series: &[f64]) -> Result<Periodogram> {
    let mean = check_series(series)?;
    let n = series.len();
    let grid = harmonic_grid(n)?;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let acov: Vec<f64> = (0..n)
        .map(|s| centered[..n - s].iter().zip(&centered[s..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect();
    let ordinates = grid
        .freqs
        .iter()
        .map(|&w| {
            let sum: f64 = acov[1..].iter().enumerate().map(|(i, r)| r * ((i + 1) as f64 * w).cos()).sum();
            let v = (acov[0] + 2.0 * sum) / (2.0 * PI);
            if v < 0.0 && v > -1e-12 {
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok(Periodogram { grid, ordinates })
}

/// Coefficients of `A - B cos ω + C cos² ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AbcConstants {
    pub fn eval(&self, omega: f64) -> f64 {
        let c = omega.cos();
        self.a - self.b * c + self.c * c * c
    }
}

pub fn abc_constants(u: f64, lambda: f64) -> AbcConstants {
    let e2 = (-2.0 * lambda).exp();
    AbcConstants {
        a: 1.0 + 4.0 * u * u * e2 - 2.0 * e2 + e2 * e2,
        b: 4.0 * u * (-lambda).exp() * (1.0 + e2),
        c: 4.0 * e2,
    }
}

/// `|1 - 2u e^{-(λ+iω)} + e^{-2(λ+iω)}|²` for `|u| <= 1`, `λ >= 0`.
pub fn gegenbauer_modulus_sq(u: f64, lambda: f64, omega: f64) -> f64 {
    let phi = u.clamp(-1.0, 1.0).acos();
    let r = (-lambda).exp();
    let one_minus_r = -(-lambda).exp_m1();
    let base = one_minus_r * one_minus_r;
    let s1 = (0.5 * (omega - phi)).sin();
    let s2 = (0.5 * (omega + phi)).sin();
    (base + 4.0 * r * s1 * s1) * (base + 4.0 * r * s2 * s2)
}

/// `|1 - e^{-(λ+iω)}|² = 1 - 2e^{-λ} cos ω + e^{-2λ}`.
pub fn tempered_difference_modulus_sq(lambda: f64, omega: f64) -> f64 {
    let r = (-lambda).exp();
    let one_minus_r = -(-lambda).exp_m1();
    let s = (0.5 * omega).sin();
    one_minus_r * one_minus_r + 4.0 * r * s * s
}

/// `|Θ(e^{-iω})|² / |Φ(e^{-iω})|²`.
pub fn arma_gain(ar: &[f64], ma: &[f64], omega: f64) -> f64 {
    fn modulus_sq(coeffs: impl Iterator<Item = (usize, f64)>, omega: f64) -> f64 {
        let (mut re, mut im) = (1.0, 0.0);
        for (k, c) in coeffs {
            let x = k as f64 * omega;
            re += c * x.cos();
            im -= c * x.sin();
        }
        re * re + im * im
    }
    let num = modulus_sq(ma.iter().enumerate().map(|(k, &c)| (k + 1, c)), omega);
    let den = modulus_sq(ar.iter().enumerate().map(|(k, &c)| (k + 1, -c)), omega);
    num / den
}

fn power_or_pole(base: f64, exponent: f64, omega: f64) -> Result<f64> {
    if base == 0.0 {
        if exponent < 0.0 {
            return Err(Error::Pole { omega });
        }
        return Ok(if exponent == 0.0 { 1.0 } else { 0.0 });
    }
    Ok(base.powf(exponent))
}

/// GARTFIMA spectral density
/// `σ²/(2π) |Θ|²/|Φ|² (A - B cos ω + C cos² ω)^{-d}`.
pub fn spectral_density(spec: &ModelSpec, omega: f64) -> Result<f64> {
    let gain = arma_gain(&spec.ar, &spec.ma, omega);
    let factor = power_or_pole(gegenbauer_modulus_sq(spec.u, spec.lambda, omega), -spec.d, omega)?;
    Ok(spec.sigma2 / (2.0 * PI) * gain * factor)
}

/// Density normalised by `σ²/(2π)`, i.e. `|Θ|²/|Φ|² · G(ω)^{-d}`.
pub fn spectral_shape(spec: &ModelSpec, omega: f64) -> Result<f64> {
    let gain = arma_gain(&spec.ar, &spec.ma, omega);
    Ok(gain * power_or_pole(gegenbauer_modulus_sq(spec.u, spec.lambda, omega), -spec.d, omega)?)
}

pub fn density_on_grid(spec: &ModelSpec, freqs: &[f64]) -> Result<Vec<f64>> {
    freqs.iter().map(|&w| spectral_density(spec, w)).collect()
}

/// ARTFIMA(p, order, λ, q) density
/// `σ²/(2π) |Θ|²/|Φ|² (1 - 2e^{-λ} cos ω + e^{-2λ})^{-order}`.
pub fn artfima_density(order: f64, lambda: f64, sigma2: f64, ar: &[f64], ma: &[f64], omega: f64) -> Result<f64> {
    let factor = power_or_pole(tempered_difference_modulus_sq(lambda, omega), -order, omega)?;
    Ok(sigma2 / (2.0 * PI) * arma_gain(ar, ma, omega) * factor)
}

/// ARFIMA(p, d, q) density `σ²/(2π) |Θ|²/|Φ|² (2 sin(ω/2))^{-2d}`.
pub fn arfima_density(d: f64, sigma2: f64, ar: &[f64], ma: &[f64], omega: f64) -> Result<f64> {
    let s = 2.0 * (0.5 * omega).sin();
    let factor = power_or_pole(s * s, -d, omega)?;
    Ok(sigma2 / (2.0 * PI) * arma_gain(ar, ma, omega) * factor)
}
