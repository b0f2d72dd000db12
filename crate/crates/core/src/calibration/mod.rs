//! Radius calibration and the asymptotics of the moment divergence.
//!
//! For i.i.d. samples, `n · D((μ̂ₙ, Σ̂ₙ) ‖ (m, S))` converges to
//! `HᵀH + ½ Tr(Z²)`, whose covariance structure is fixed by the third and
//! fourth moments of the isotropic vector `η = S^{-1/2}(ξ − m)`. For Gaussian
//! data the limit is `χ²(d(d+3)/2)`, which gives the radius rule
//! `ρ = χ²_α(d(d+3)/2) / n`.
//!
//! Random streams: every replication `r` draws from `ChaCha8Rng` seeded with
//! `seed` and switched to stream `r` (see [`rep_rng`]).

mod chi2;
mod ks;
mod limiting;
mod simulate;
mod tensors;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use chi2::{chi2_cdf, chi2_quantile, ln_gamma, regularized_gamma_p};
pub use ks::{ks_distance, ks_distance_cdf, ks_distance_two_sample, Reference};
pub use limiting::{joint_covariance, sample_limiting_law};
pub use simulate::{simulate_divergence_distribution, AffineMap, Generator, Simulation};
pub use tensors::{estimate_moment_tensors, MomentTensors};

use crate::error::{Error, Result};

/// Identifier of the random stream layout, recorded in exported metadata.
pub const RNG_FAMILY: &str = "chacha8/seed+stream-per-rep";

/// Number of free parameters in a mean and a symmetric covariance: `d(d+3)/2`.
pub fn moment_degrees_of_freedom(d: usize) -> usize {
    d * (d + 3) / 2
}

/// `χ²_α(d(d+3)/2) / n`.
pub fn clt_radius(n: usize, d: usize, alpha: f64) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::DomainError(format!("need n >= 1 and d >= 1 (n = {n}, d = {d})")));
    }
    Ok(chi2_quantile(alpha, moment_degrees_of_freedom(d))? / n as f64)
}

/// Independent random stream for replication `rep`.
pub fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}
