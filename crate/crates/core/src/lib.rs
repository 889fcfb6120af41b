//! Gegenbauer autoregressive tempered fractionally integrated moving average
//! (GARTFIMA) models and their ARFIMA, ARTFIMA and GARMA special cases.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: log-gamma, Gauss hypergeometric series, Gegenbauer and
//!   ARMA power-series coefficients.
//! - [`model`]: the parameter container, validity rules and family reduction.
//! - [`spectrum`]: exact spectral densities, harmonic grids and periodograms.
//! - [`acvf`]: autocovariances by Gegenbauer series, hypergeometric closed
//!   form and FFT inversion of the density.
//! - [`simulate`]: sample paths by truncated MA(∞) filtering.
//! - [`estimate`]: log-periodogram least squares, Whittle likelihood, the
//!   bounded Nelder–Mead driver, order selection and Monte Carlo studies.
//! - [`forecast`]: AR(∞) weights, one-step forecasts and model comparison.

pub mod acvf;
pub mod error;
pub mod estimate;
pub mod forecast;
pub mod model;
pub mod numerics;
pub mod simulate;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{ModelFamily, ModelSpec};
