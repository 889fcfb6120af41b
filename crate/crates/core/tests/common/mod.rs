#![allow(dead_code)]

use std::f64::consts::PI;

/// Biased sample autocovariances `(1/n) Σ (x_t - x̄)(x_{t+h} - x̄)`.
pub fn sample_acvf(x: &[f64], h_max: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    (0..=h_max).map(|h| c[..n - h].iter().zip(&c[h..]).map(|(a, b)| a * b).sum::<f64>() / n as f64).collect()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `∫_{-π}^{π} f(ω) cos(hω) dω` for an even integrand, by Simpson on `[0, π]`.
pub fn fourier_coeff<F: Fn(f64) -> f64>(f: F, h: usize, n: usize) -> f64 {
    2.0 * simpson(|w| f(w) * (h as f64 * w).cos(), 0.0, PI, n)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// One numeric column, optional header line.
pub fn read_series(path: &str) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let field = line.split(',').next_back().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(_) => return Err(format!("{path}: row {} is not numeric", i + 1)),
        }
    }
    Ok(out)
}
