//! Model parameters, validity rules and reduction to special cases.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Root moduli within this distance of 1 are treated as lying on the unit circle.
pub const UNIT_ROOT_TOL: f64 = 1e-9;

/// Full parameter set of a GARTFIMA(p, d, λ, u, q) model.
///
/// `Φ(B) (1 - 2 u e^{-λ} B + e^{-2λ} B²)^d X_t = Θ(B) ε_t` with
/// `Φ(z) = 1 - Σ φ_j z^j`, `Θ(z) = 1 + Σ θ_j z^j` and `Var ε_t = sigma2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default)]
    pub ar: Vec<f64>,
    #[serde(default)]
    pub ma: Vec<f64>,
    pub d: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub u: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
}

fn default_sigma2() -> f64 {
    1.0
}

impl ModelSpec {
    /// GARTFIMA(0, d, λ, u, 0).
    pub fn core(d: f64, lambda: f64, u: f64, sigma2: f64) -> Self {
        Self { ar: Vec::new(), ma: Vec::new(), d, lambda, u, sigma2 }
    }

    /// ARTFIMA(p, order, λ, q) expressed as a GARTFIMA model with u = 1 and
    /// d = order / 2.
    pub fn artfima(order: f64, lambda: f64, sigma2: f64) -> Self {
        Self::core(order / 2.0, lambda, 1.0, sigma2)
    }

    pub fn with_ar(mut self, ar: Vec<f64>) -> Self {
        self.ar = ar;
        self
    }

    pub fn with_ma(mut self, ma: Vec<f64>) -> Self {
        self.ma = ma;
        self
    }

    pub fn p(&self) -> usize {
        self.ar.len()
    }

    pub fn q(&self) -> usize {
        self.ma.len()
    }

    /// Checks the spec against `family` and converts violations into an error.
    pub fn ensure_valid(&self, family: ModelFamily) -> Result<()> {
        let report = validate(self, family);
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidModel(report.to_string()))
        }
    }

    /// Checks the spec against the family it reduces to, so pinned boundary
    /// values such as u = 1 are accepted.
    pub fn ensure_valid_reduced(&self) -> Result<()> {
        self.ensure_valid(reduce(self).family)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelFamily {
    Gartfima,
    Artfima,
    Arfima,
    Garma,
    Gegenbauer,
    Arma,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 6] = [
        ModelFamily::Gartfima,
        ModelFamily::Artfima,
        ModelFamily::Arfima,
        ModelFamily::Garma,
        ModelFamily::Gegenbauer,
        ModelFamily::Arma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Gartfima => "GARTFIMA",
            ModelFamily::Artfima => "ARTFIMA",
            ModelFamily::Arfima => "ARFIMA",
            ModelFamily::Garma => "GARMA",
            ModelFamily::Gegenbauer => "GEGENBAUER",
            ModelFamily::Arma => "ARMA",
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain(format!("unknown model family '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite { param: &'static str },
    DOutOfRange { d: f64, bound: &'static str },
    NegativeLambda { lambda: f64 },
    UOutOfRange { u: f64, bound: &'static str },
    NonPositiveSigma2 { sigma2: f64 },
    ArRoot { modulus: f64 },
    MaRoot { modulus: f64 },
    Pinned { param: &'static str, expected: f64, got: f64 },
    ArmaNotAllowed,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { param } => write!(f, "{param} must be finite"),
            Violation::DOutOfRange { d, bound } => write!(f, "{bound} violated by d = {d}"),
            Violation::NegativeLambda { lambda } => write!(f, "lambda >= 0 violated by lambda = {lambda}"),
            Violation::UOutOfRange { u, bound } => write!(f, "{bound} violated by u = {u}"),
            Violation::NonPositiveSigma2 { sigma2 } => write!(f, "sigma2 > 0 violated by sigma2 = {sigma2}"),
            Violation::ArRoot { modulus } => write!(f, "AR root {} (|root| = {modulus})", root_place(*modulus)),
            Violation::MaRoot { modulus } => write!(f, "MA root {} (|root| = {modulus})", root_place(*modulus)),
            Violation::Pinned { param, expected, got } => {
                write!(f, "{param} must equal {expected} for this family, got {got}")
            }
            Violation::ArmaNotAllowed => write!(f, "family admits no AR or MA terms"),
        }
    }
}

fn root_place(modulus: f64) -> &'static str {
    if (modulus - 1.0).abs() <= UNIT_ROOT_TOL {
        "on unit circle"
    } else {
        "inside unit circle"
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("ok");
        }
        let parts: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Smallest modulus among the roots of `1 + c_1 z + ... + c_k z^k`, or
/// `None` for a constant polynomial.
pub fn min_root_modulus(coeffs: &[f64]) -> Option<f64> {
    let mut deg = coeffs.len().saturating_sub(1);
    while deg > 0 && coeffs[deg] == 0.0 {
        deg -= 1;
    }
    if deg == 0 {
        return None;
    }
    // Roots μ of the reversed monic polynomial are reciprocals of the roots z.
    let a0 = coeffs[0];
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for j in 0..deg {
        companion[(0, j)] = -coeffs[j + 1] / a0;
    }
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    let max_mu = companion
        .complex_eigenvalues()
        .iter()
        .map(|mu| mu.norm())
        .fold(0.0_f64, f64::max);
    Some(if max_mu == 0.0 { f64::INFINITY } else { 1.0 / max_mu })
}

/// Checks every validity condition of `family` and reports all violations.
///
/// `Gartfima` is the strict model (|u| < 1). The other families run in
/// reduction-evaluation mode, which admits the pinned boundary values
/// (u = 1 for ARTFIMA/ARFIMA, |u| = 1 for GARMA/Gegenbauer).
pub fn validate(spec: &ModelSpec, family: ModelFamily) -> ValidationReport {
    let mut v = Vec::new();
    let scalars = [("d", spec.d), ("lambda", spec.lambda), ("u", spec.u), ("sigma2", spec.sigma2)];
    for (name, x) in scalars {
        if !x.is_finite() {
            v.push(Violation::NonFinite { param: name });
        }
    }
    if spec.ar.iter().any(|x| !x.is_finite()) {
        v.push(Violation::NonFinite { param: "ar" });
    }
    if spec.ma.iter().any(|x| !x.is_finite()) {
        v.push(Violation::NonFinite { param: "ma" });
    }
    if !v.is_empty() {
        return ValidationReport { violations: v };
    }

    let (d, lambda, u) = (spec.d, spec.lambda, spec.u);
    if lambda < 0.0 {
        v.push(Violation::NegativeLambda { lambda });
    }
    if spec.sigma2 <= 0.0 {
        v.push(Violation::NonPositiveSigma2 { sigma2: spec.sigma2 });
    }
    let pin = |v: &mut Vec<Violation>, param, expected: f64, got: f64| {
        if got != expected {
            v.push(Violation::Pinned { param, expected, got });
        }
    };

    match family {
        ModelFamily::Gartfima => {
            if d.abs() >= 0.5 {
                v.push(Violation::DOutOfRange { d, bound: "|d| < 1/2" });
            }
            if u.abs() >= 1.0 {
                v.push(Violation::UOutOfRange { u, bound: "|u| < 1" });
            }
        }
        ModelFamily::Artfima => {
            pin(&mut v, "u", 1.0, u);
            if d.abs() >= 0.5 {
                v.push(Violation::DOutOfRange { d, bound: "|d| < 1/2" });
            } else if lambda == 0.0 && d.abs() >= 0.25 {
                v.push(Violation::DOutOfRange { d, bound: "|2d| < 1/2 when lambda = 0" });
            }
        }
        ModelFamily::Arfima => {
            pin(&mut v, "u", 1.0, u);
            pin(&mut v, "lambda", 0.0, lambda);
            if d.abs() >= 0.25 {
                v.push(Violation::DOutOfRange { d, bound: "|2d| < 1/2" });
            }
        }
        ModelFamily::Garma | ModelFamily::Gegenbauer => {
            pin(&mut v, "lambda", 0.0, lambda);
            if family == ModelFamily::Gegenbauer && (spec.p() > 0 || spec.q() > 0) {
                v.push(Violation::ArmaNotAllowed);
            }
            if u.abs() > 1.0 {
                v.push(Violation::UOutOfRange { u, bound: "|u| <= 1" });
            } else if u.abs() == 1.0 {
                if d >= 0.25 || d <= -0.5 {
                    v.push(Violation::DOutOfRange { d, bound: "d < 1/4 when |u| = 1" });
                }
            } else if d.abs() >= 0.5 {
                v.push(Violation::DOutOfRange { d, bound: "|d| < 1/2" });
            }
        }
        ModelFamily::Arma => {
            pin(&mut v, "d", 0.0, d);
            if u.abs() > 1.0 {
                v.push(Violation::UOutOfRange { u, bound: "|u| <= 1" });
            }
        }
    }

    if let Some(m) = min_root_modulus(&crate::numerics::ar_polynomial(&spec.ar)) {
        if m <= 1.0 + UNIT_ROOT_TOL {
            v.push(Violation::ArRoot { modulus: m });
        }
    }
    if let Some(m) = min_root_modulus(&crate::numerics::ma_polynomial(&spec.ma)) {
        if m <= 1.0 + UNIT_ROOT_TOL {
            v.push(Violation::MaRoot { modulus: m });
        }
    }
    ValidationReport { violations: v }
}

/// Classification of a spec by exact parameter pinning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduction {
    pub family: ModelFamily,
    /// Differencing order in the reduced family's own convention: `2d` for
    /// ARTFIMA and ARFIMA, `d` otherwise.
    pub effective_d: f64,
}

pub fn reduce(spec: &ModelSpec) -> Reduction {
    let (d, lambda, u) = (spec.d, spec.lambda, spec.u);
    if d == 0.0 {
        Reduction { family: ModelFamily::Arma, effective_d: 0.0 }
    } else if u == 1.0 && lambda == 0.0 {
        Reduction { family: ModelFamily::Arfima, effective_d: 2.0 * d }
    } else if u == 1.0 {
        Reduction { family: ModelFamily::Artfima, effective_d: 2.0 * d }
    } else if lambda == 0.0 {
        Reduction { family: ModelFamily::Garma, effective_d: d }
    } else {
        Reduction { family: ModelFamily::Gartfima, effective_d: d }
    }
}
