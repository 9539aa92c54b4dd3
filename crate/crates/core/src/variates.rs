//! Seeded generation of exponential and Generalized Exponential (GE) variates.
//!
//! A GE variate with rate `ν` and squared coefficient of variation `scv ≥ 1`
//! has the two-phase form
//!
//! ```text
//! F(t) = 1 − τ·exp(−τ·ν·t),   t ≥ 0,   τ = 2 / (scv + 1)
//! ```
//!
//! i.e. an atom of mass `1 − τ` at zero and, with probability `τ`, an
//! exponential of rate `τ·ν`. The mean is `1/ν` and the SCV is `scv`. Used as
//! an interarrival law the zero atom produces geometric batches of mean size
//! `1/τ`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{invalid, Result};

/// Rate and SCV of a GE distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeParams {
    rate: f64,
    scv: f64,
}

impl GeParams {
    pub fn new(rate: f64, scv: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(invalid(format!("GE rate must be finite and > 0, got {rate}")));
        }
        if !(scv.is_finite() && scv >= 1.0) {
            return Err(invalid(format!("GE scv must be finite and >= 1, got {scv}")));
        }
        Ok(Self { rate, scv })
    }

    /// Exponential law of the given rate (SCV = 1).
    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(rate, 1.0)
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn scv(&self) -> f64 {
        self.scv
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn tau(&self) -> f64 {
        ge_tau(self)
    }
}

/// Branching probability of the exponential phase, `2 / (scv + 1)`.
pub fn ge_tau(params: &GeParams) -> f64 {
    2.0 / (params.scv + 1.0)
}

/// Seeded 64-bit generator (xoshiro256++).
///
/// The 256-bit state is expanded from the 64-bit seed with SplitMix64, so
/// equal seeds always give bit-identical streams.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: Xoshiro256PlusPlus,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `index` under `base_seed`:
/// `mix64(base_seed + (index + 1)·0x9e3779b97f4a7c15)` (wrapping).
pub fn replication_seed(base_seed: u64, index: u64) -> u64 {
    mix64(base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Independent substream for one replication.
    pub fn for_replication(base_seed: u64, index: u64) -> Self {
        Self::new(replication_seed(base_seed, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1): the top 53 bits plus a half ulp,
    /// so neither 0 nor 1 can be returned.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// `true` with probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p >= 1.0 {
            return true;
        }
        if p <= 0.0 {
            return false;
        }
        self.uniform_open() < p
    }
}

/// Inverse transform of an exponential law: `−ln(u) / rate`.
pub fn exp_from_uniform(rate: f64, u: f64) -> f64 {
    -u.ln() / rate
}

/// Exponential variate with the given rate. Panics unless `rate` is finite and positive.
pub fn exp_sample(rate: f64, rng: &mut Rng) -> f64 {
    assert!(rate.is_finite() && rate > 0.0, "exponential rate must be > 0, got {rate}");
    exp_from_uniform(rate, rng.uniform_open())
}

/// GE variate: exactly zero with probability `1 − τ`, otherwise
/// exponential with rate `τ·rate`.
pub fn ge_sample(params: &GeParams, rng: &mut Rng) -> f64 {
    let tau = params.tau();
    if tau >= 1.0 {
        return exp_from_uniform(params.rate, rng.uniform_open());
    }
    if rng.uniform_open() >= tau {
        return 0.0;
    }
    exp_from_uniform(tau * params.rate, rng.uniform_open())
}
