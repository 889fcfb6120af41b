//! Sample paths by truncated MA(∞) filtering of Gaussian innovations
//! followed by the ARMA recursion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::numerics::{self, CoeffSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_burnin")]
    pub burnin: usize,
    /// Truncation `M` of the MA(∞) Gegenbauer filter.
    #[serde(default = "default_trunc")]
    pub trunc_len: usize,
}

fn default_burnin() -> usize {
    500
}

fn default_trunc() -> usize {
    1000
}

impl SimulationConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, seed, burnin: default_burnin(), trunc_len: default_trunc() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain("simulation length n must be >= 1"));
        }
        if self.trunc_len == 0 {
            return Err(Error::domain("truncation length must be >= 1"));
        }
        Ok(())
    }
}

/// Seed of replication `r` in a study with base seed `base`.
pub fn derive_stream_seed(base: u64, r: u64) -> u64 {
    base ^ r
}

/// Weights `C_n^d(u) e^{-λn}`, n = 0..=M, of `(1 - 2ue^{-λ}B + e^{-2λ}B²)^{-d}`.
pub fn gartfima_ma_weights(spec: &ModelSpec, m: usize) -> Result<CoeffSeq> {
    numerics::tempered_gegenbauer_coeffs(spec.d, spec.u, spec.lambda, m)
}

/// Simulates `config.n` observations of `spec`.
pub fn simulate(spec: &ModelSpec, config: &SimulationConfig) -> Result<Vec<f64>> {
    spec.ensure_valid_reduced()?;
    config.validate()?;
    let m = config.trunc_len;
    let len = config.n + config.burnin;
    let w = gartfima_ma_weights(spec, m)?.values;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sd = spec.sigma2.sqrt();
    let eps: Vec<f64> = (0..len + m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect();

    let eta: Vec<f64> = if spec.d == 0.0 {
        eps[m..].to_vec()
    } else {
        (0..len)
            .map(|t| {
                let end = t + m;
                w.iter().enumerate().map(|(k, wk)| wk * eps[end - k]).sum()
            })
            .collect()
    };

    let mut x = vec![0.0; len];
    for t in 0..len {
        let mut v = eta[t];
        for (i, th) in spec.ma.iter().enumerate() {
            if t > i {
                v += th * eta[t - i - 1];
            }
        }
        for (j, ph) in spec.ar.iter().enumerate() {
            if t > j {
                v += ph * x[t - j - 1];
            }
        }
        x[t] = v;
    }
    x.drain(..config.burnin);
    Ok(x)
}
