//! Special functions and power-series utilities.
//!
//! Everything here is a pure function of its arguments. The Gegenbauer
//! coefficients are the coefficients of the generating function
//! `(1 - 2 u z + z^2)^(-d)` and are produced by the three-term recurrence,
//! never by the explicit alternating Γ-ratio sum.
//!
//! Note on the explicit sum: one commonly printed form of `C_n^d(u)` carries
//! `Γ(d) Γ(n+1) Γ(n-2k+1)` in the denominator. The standard form is
//! `Σ_k (-1)^k Γ(n-k+d) / (Γ(d) Γ(k+1) Γ(n-2k+1)) (2u)^(n-2k)`; only the
//! latter agrees with the generating function, and it is the one used as an
//! independent check in the tests.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Truncated coefficient sequence of a power series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffSeq {
    pub values: Vec<f64>,
    pub truncation_len: usize,
    /// Estimated magnitude of the first omitted coefficient.
    pub tail_bound: f64,
}

impl CoeffSeq {
    pub(crate) fn new(values: Vec<f64>, tail_bound: f64) -> Self {
        let truncation_len = values.len();
        let tail_bound = if tail_bound.is_finite() { tail_bound.abs() } else { f64::MAX };
        Self { values, truncation_len, tail_bound }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Evaluates the truncated series at `z`.
    pub fn eval(&self, z: f64) -> f64 {
        self.values.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }
}

impl std::ops::Index<usize> for CoeffSeq {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

// ---------------------------------------------------------------------------
// Gamma function
// ---------------------------------------------------------------------------

/// `ζ(k) - 1` for k = 2..=41, by Euler–Maclaurin summation.
fn zeta_minus_one_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // B_2, B_4, ..., B_10 divided by (2j)!
        const B_OVER_FACT: [f64; 5] = [
            1.0 / 6.0 / 2.0,
            -1.0 / 30.0 / 24.0,
            1.0 / 42.0 / 720.0,
            -1.0 / 30.0 / 40320.0,
            5.0 / 66.0 / 3_628_800.0,
        ];
        let n = 20.0_f64;
        (2..=41)
            .map(|k| {
                let k = k as f64;
                let mut s: f64 = (2..20).map(|i| (i as f64).powf(-k)).sum();
                s += n.powf(1.0 - k) / (k - 1.0) + 0.5 * n.powf(-k);
                // rising factorial (k)_{2j-1}
                let mut rising = k;
                let mut power = n.powf(-k - 1.0);
                for (j, b) in B_OVER_FACT.iter().enumerate() {
                    if j > 0 {
                        let m = (2 * j) as f64;
                        rising *= (k + m) * (k + m - 1.0);
                        power /= n * n;
                    }
                    s += b * rising * power;
                }
                s
            })
            .collect()
    })
}

/// `ln Γ(1 + z)` for `|z| <= 0.5` from the zeta-function Taylor series.
fn ln_gamma_1p(z: f64) -> f64 {
    let table = zeta_minus_one_table();
    let mut acc = 0.0;
    // (-1)^k z^k = (-z)^k
    let mut zk = -z;
    for (i, zm1) in table.iter().enumerate() {
        let k = (i + 2) as f64;
        zk *= -z;
        let term = zm1 * zk / k;
        acc += term;
        if term.abs() < 1e-19 * acc.abs().max(1e-300) {
            break;
        }
    }
    (1.0 - EULER_GAMMA) * z - z.ln_1p() + acc
}

fn ln_gamma_stirling(x: f64) -> f64 {
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut p = inv;
    for c in C {
        series += c * p;
        p *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + series
}

/// Natural logarithm of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        ln_gamma_1p(x) - x.ln()
    } else if x <= 1.5 {
        ln_gamma_1p(x - 1.0)
    } else if x <= 2.5 {
        (x - 1.0).ln() + ln_gamma_1p(x - 2.0)
    } else if x < 15.0 {
        let shift = (15.0 - x).ceil();
        let mut log_prod = 0.0;
        let mut y = x;
        for _ in 0..shift as usize {
            log_prod += y.ln();
            y += 1.0;
        }
        ln_gamma_stirling(y) - log_prod
    } else {
        ln_gamma_stirling(x)
    }
}

/// `1 / Γ(x)` for any real `x`; zero at the poles of Γ.
pub fn recip_gamma(x: f64) -> f64 {
    if x > 0.0 {
        if x > 171.0 {
            return 0.0;
        }
        (-ln_gamma_pos(x)).exp()
    } else if x == x.floor() {
        0.0
    } else {
        // reflection: 1/Γ(x) = sin(πx) Γ(1-x) / π
        (PI * x).sin() * ln_gamma_pos(1.0 - x).exp() / PI
    }
}

/// Ratio `Γ(a + n) / (Γ(a) n!)` computed as a running product.
pub fn rising_over_factorial(a: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (a + k as f64) / (k as f64 + 1.0))
}

// ---------------------------------------------------------------------------
// Hypergeometric series
// ---------------------------------------------------------------------------

const HYP_MAX_TERMS: usize = 50_000_000;

/// Gauss hypergeometric series `2F1(a, b; c; z)` for `|z| < 1`.
///
/// Terms are accumulated with multiplicative Pochhammer ratios until the next
/// term falls below `1e-15` of the partial sum once terms are shrinking.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(z.abs() < 1.0) {
        return Err(Error::domain(format!("2F1 requires |z| < 1, got z = {z}")));
    }
    if c <= 0.0 && c == c.floor() {
        return Err(Error::domain(format!("2F1 undefined for c = {c}")));
    }
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 0..HYP_MAX_TERMS {
        let kf = k as f64;
        let ratio = (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        let next = term * ratio;
        if next == 0.0 {
            return Ok(sum);
        }
        if next.abs() < 1e-15 * sum.abs() && ratio.abs() < 1.0 {
            return Ok(sum + next);
        }
        sum += next;
        term = next;
    }
    Err(Error::NoConvergence { what: format!("2F1({a}, {b}; {c}; {z})"), iterations: HYP_MAX_TERMS })
}

// ---------------------------------------------------------------------------
// Gegenbauer coefficients
// ---------------------------------------------------------------------------

/// Coefficients `C_0..=C_{n_max}` of `(1 - 2 u z + z^2)^(-d)`.
pub fn gegenbauer_coeffs(d: f64, u: f64, n_max: usize) -> Result<CoeffSeq> {
    tempered_gegenbauer_coeffs(d, u, 0.0, n_max)
}

/// Coefficients of `(1 - 2 u r z + r^2 z^2)^(-d)` with `r = e^(-lambda)`,
/// i.e. `C_n^d(u) e^(-lambda n)`.
///
/// The scaled recurrence keeps large `n` free of overflow/underflow
/// mismatches between `C_n` and `r^n`.
pub fn tempered_gegenbauer_coeffs(d: f64, u: f64, lambda: f64, n_max: usize) -> Result<CoeffSeq> {
    if !(u.abs() <= 1.0) {
        return Err(Error::domain(format!("Gegenbauer coefficients require |u| <= 1, got u = {u}")));
    }
    if !d.is_finite() {
        return Err(Error::domain(format!("non-finite order d = {d}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("tempering requires finite lambda >= 0, got {lambda}")));
    }
    let r = (-lambda).exp();
    let mut c = Vec::with_capacity(n_max + 1);
    c.push(1.0);
    if n_max >= 1 {
        c.push(2.0 * d * u * r);
    }
    let two_ur = 2.0 * u * r;
    let r2 = r * r;
    for n in 2..=n_max {
        let nf = n as f64;
        let v = (two_ur * (nf + d - 1.0) * c[n - 1] - r2 * (nf + 2.0 * d - 2.0) * c[n - 2]) / nf;
        c.push(v);
    }
    let tail = gegenbauer_tail_bound(d, u, r, &c);
    Ok(CoeffSeq::new(c, tail))
}

/// Magnitude estimate of the first omitted scaled coefficient
/// `C_{N+1}^d(u) r^(N+1)` given the scaled values `C_n r^n`, n = 0..=N.
pub(crate) fn gegenbauer_tail_bound(d: f64, u: f64, r: f64, scaled: &[f64]) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    let n = scaled.len() - 1;
    let last = scaled[n].abs() * r;
    let prev = if n >= 1 { scaled[n - 1].abs() * r * r } else { last };
    let m = (n + 1) as f64;
    if u.abs() == 1.0 {
        // C_n(±1) = ±(2d)_n / n!, so the next magnitude follows exactly
        return last * ((n as f64 + 2.0 * d) / m).abs();
    }
    if d >= 0.5 {
        return last.max(prev) * (1.0 + (2.0 * d - 1.0).abs() / m);
    }
    let phi = u.acos();
    let envelope = 2.0 * m.powf(d - 1.0) * recip_gamma(d).abs() / (2.0 * phi.sin()).powf(d) * r.powf(m);
    envelope.max(last)
}

// ---------------------------------------------------------------------------
// ARMA power series
// ---------------------------------------------------------------------------

/// MA(∞) weights of `Θ(z) / Φ(z)` with `Φ(z) = 1 - Σ φ_k z^k` and
/// `Θ(z) = 1 + Σ θ_k z^k`.
pub fn arma_psi_weights(ar: &[f64], ma: &[f64], n_max: usize) -> CoeffSeq {
    let mut psi = Vec::with_capacity(n_max + 1);
    psi.push(1.0);
    for j in 1..=n_max {
        let mut v = if j <= ma.len() { ma[j - 1] } else { 0.0 };
        for (k, phi) in ar.iter().enumerate().take(j) {
            v += phi * psi[j - k - 1];
        }
        psi.push(v);
    }
    let width = ar.len().max(1);
    let tail = psi.iter().rev().take(width).fold(0.0_f64, |m, v| m.max(v.abs()));
    CoeffSeq::new(psi, tail)
}

/// Coefficients `1, -φ_1, ..., -φ_p` of the AR polynomial.
pub fn ar_polynomial(ar: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(ar.iter().map(|p| -p)).collect()
}

/// Coefficients `1, θ_1, ..., θ_q` of the MA polynomial.
pub fn ma_polynomial(ma: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(ma.iter().copied()).collect()
}

/// Cauchy product of two series truncated to `len` terms.
pub fn convolve(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Power-series quotient `num / den` truncated to `len` terms; `den[0]` must be nonzero.
pub fn series_divide(num: &[f64], den: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for n in 0..len {
        let mut v = num.get(n).copied().unwrap_or(0.0);
        for k in 1..den.len().min(n + 1) {
            v -= den[k] * out[n - k];
        }
        out[n] = v / den[0];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn ln_gamma_exact_points() {
        assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
        assert!(ln_gamma(2.0).unwrap().abs() < 1e-16);
        assert!((ln_gamma(0.5).unwrap() - 0.572_364_942_924_700_1).abs() < 1e-15);
    }

    #[test]
    fn ln_gamma_reference_values() {
        // high-precision reference values
        let cases = [
            (0.001, 6.907_178_885_383_853_682_5),
            (0.1, 2.252_712_651_734_205_959_9),
            (0.4999, 0.572_561_318_604_118_437_52),
            (0.5001, 0.572_168_616_593_304_553_81),
            (0.999, 0.000_578_038_532_891_379_724_04),
            (1.001, -0.000_576_393_598_283_369_541_63),
            (1.4999, -0.120_785_881_958_493_938_63),
            (1.5001, -0.120_778_583_963_974_488_87),
            (1.999, -0.000_422_461_800_692_153_776_11),
            (2.001, 0.000_423_106_734_800_163_625_18),
            (2.4999, 0.284_612_557_260_682_784_09),
            (2.5001, 0.284_753_188_588_733_098_04),
            (3.7, 1.428_072_326_665_387_921_9),
            (14.9, 24.924_132_002_217_277_353),
            (15.1, 25.458_999_750_992_664_036),
            (100.5, 361.435_540_467_777_621_56),
            (12345.678, 103_959.919_905_546_060_92),
            (1e6, 12_815_504.569_147_611_66),
        ];
        for (x, want) in cases {
            let got = ln_gamma(x).unwrap();
            assert!(rel(got, want) <= 1e-12, "x={x}: got {got}, want {want}");
        }
    }

    #[test]
    fn ln_gamma_rejects_nonpositive() {
        assert!(ln_gamma(0.0).is_err());
        assert!(ln_gamma(-1.5).is_err());
        assert!(ln_gamma(f64::NAN).is_err());
    }

    #[test]
    fn recip_gamma_handles_negative_arguments() {
        assert_eq!(recip_gamma(-2.0), 0.0);
        // Γ(-0.5) = -2√π
        assert!(rel(recip_gamma(-0.5), -1.0 / (2.0 * PI.sqrt())) < 1e-13);
        assert!(rel(recip_gamma(0.5), 1.0 / PI.sqrt()) < 1e-13);
    }

    #[test]
    fn hypergeometric_examples() {
        assert_eq!(gauss_2f1(0.3, -1.7, 2.2, 0.0).unwrap(), 1.0);
        let v = gauss_2f1(1.0, 1.0, 2.0, 0.5).unwrap();
        assert!((v - 1.386_294_361_119_890_6).abs() < 1e-12);
        // extended-precision brute-force summation reference
        let v = gauss_2f1(0.8, 0.8, 1.0, (-0.4_f64).exp()).unwrap();
        assert!(rel(v, 2.019_198_238_598_064) < 1e-13, "{v}");
    }

    #[test]
    fn hypergeometric_domain_errors() {
        assert!(gauss_2f1(1.0, 1.0, 2.0, 1.0).is_err());
        assert!(gauss_2f1(1.0, 1.0, 2.0, -1.2).is_err());
        assert!(gauss_2f1(1.0, 1.0, -3.0, 0.2).is_err());
        assert!(gauss_2f1(1.0, 1.0, 0.0, 0.2).is_err());
    }

    #[test]
    fn hypergeometric_terminating_polynomial() {
        // 2F1(-2, b; c; z) = 1 - 2bz/c + b(b+1)z²/(c(c+1))
        let (b, c, z) = (1.5, 2.5, 0.7);
        let want = 1.0 - 2.0 * b * z / c + b * (b + 1.0) * z * z / (c * (c + 1.0));
        assert!(rel(gauss_2f1(-2.0, b, c, z).unwrap(), want) < 1e-14);
    }

    #[test]
    fn gegenbauer_low_order_values() {
        let c = gegenbauer_coeffs(0.4, 0.1, 5).unwrap();
        assert_eq!(c[0], 1.0);
        assert!((c[1] - 0.08).abs() < 1e-15);
        assert!((c[2] + 0.3888).abs() < 1e-14);
        assert!((c[3] + 0.110_208).abs() < 1e-14);
        assert_eq!(c.truncation_len, 6);
        assert!(c.tail_bound.is_finite() && c.tail_bound >= 0.0);
    }

    #[test]
    fn gegenbauer_matches_standard_explicit_sum() {
        // returns (sum, sum of absolute terms)
        fn explicit(d: f64, u: f64, n: usize) -> (f64, f64) {
            (0..=n / 2)
                .map(|k| {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let lg = ln_gamma(n as f64 - k as f64 + d).unwrap()
                        - ln_gamma(d).unwrap()
                        - ln_gamma(k as f64 + 1.0).unwrap()
                        - ln_gamma((n - 2 * k) as f64 + 1.0).unwrap();
                    sign * lg.exp() * (2.0 * u).powi((n - 2 * k) as i32)
                })
                .fold((0.0, 0.0), |(s, a), t| (s + t, a + t.abs()))
        }
        for &(d, u) in &[(0.4, 0.1), (0.25, -0.7), (0.45, 0.95), (1.3, 0.3)] {
            let c = gegenbauer_coeffs(d, u, 30).unwrap();
            for n in 0..=30 {
                let (want, scale) = explicit(d, u, n);
                assert!((c[n] - want).abs() < 1e-12 * scale.max(1.0), "d={d} u={u} n={n}");
            }
        }
    }

    #[test]
    fn gegenbauer_rejects_u_outside_unit_interval() {
        assert!(gegenbauer_coeffs(0.3, 1.01, 4).is_err());
        assert!(tempered_gegenbauer_coeffs(0.3, 0.2, -0.1, 4).is_err());
    }

    #[test]
    fn gegenbauer_unit_u_is_binomial() {
        let c = gegenbauer_coeffs(0.2, 1.0, 40).unwrap();
        for n in 0..=40 {
            assert!(rel(c[n], rising_over_factorial(0.4, n)) < 1e-13);
        }
        // tail bound at |u| = 1 is the exact next magnitude
        assert!(rel(c.tail_bound, rising_over_factorial(0.4, 41)) < 1e-13);
    }

    #[test]
    fn tempered_coefficients_are_scaled() {
        let plain = gegenbauer_coeffs(0.3, 0.2, 50).unwrap();
        let lam = 0.4;
        let tempered = tempered_gegenbauer_coeffs(0.3, 0.2, lam, 50).unwrap();
        for n in 0..=50 {
            let want = plain[n] * (-lam * n as f64).exp();
            assert!((tempered[n] - want).abs() < 1e-15 + 1e-13 * want.abs());
        }
        assert!(rel(tempered.tail_bound, plain.tail_bound * (-lam * 51.0).exp()) < 1e-9);
    }

    #[test]
    fn psi_weight_examples() {
        let w = arma_psi_weights(&[0.5], &[], 3);
        assert_eq!(w.values, vec![1.0, 0.5, 0.25, 0.125]);
        let w = arma_psi_weights(&[], &[0.3], 2);
        assert_eq!(w.values, vec![1.0, 0.3, 0.0]);
        let w = arma_psi_weights(&[0.5], &[0.3], 2);
        assert!((w[1] - 0.8).abs() < 1e-15 && (w[2] - 0.4).abs() < 1e-15);
        // long division of (1 + 0.3z) by (1 - 0.5z)
        let q = series_divide(&ma_polynomial(&[0.3]), &ar_polynomial(&[0.5]), 3);
        assert_eq!(q, w.values);
    }

    #[test]
    fn series_division_inverts_convolution() {
        let a = [1.0, -0.4, 0.25, 0.1];
        let b = [1.0, 0.3, -0.2];
        let prod = convolve(&a, &b, 10);
        let back = series_divide(&prod, &b, 4);
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
