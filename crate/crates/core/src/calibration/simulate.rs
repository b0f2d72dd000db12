//! Finite-sample distribution of `n · D((μ̂ₙ, Σ̂ₙ) ‖ (m, S))`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::rep_rng;
use crate::divergence::divergence;
use crate::error::{Error, Result};
use crate::linalg::{raw_moments, MomentPair};

/// Redraw budget per replication before giving up on a singular sample.
pub const MAX_REDRAWS: usize = 1000;

/// Coordinate distribution of the underlying vector `ζ` (zero mean, unit variance).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Gaussian,
    /// `(χ²(1) − 1)/√2`, independent coordinates.
    NormalizedChi2,
}

impl Generator {
    fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        match self {
            Generator::Gaussian => z,
            Generator::NormalizedChi2 => (z * z - 1.0) / std::f64::consts::SQRT_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Generator::Gaussian => "gaussian",
            Generator::NormalizedChi2 => "chi2",
        }
    }
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Generator::Gaussian),
            "chi2" | "normalized_chi2" => Ok(Generator::NormalizedChi2),
            other => Err(Error::InvalidInput(format!("unknown generator '{other}'"))),
        }
    }
}

/// Optional affine map `ξ = C ζ + m` applied to every draw.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub scale: DMatrix<f64>,
    pub shift: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    /// One `n · D` value per replication, in replication order.
    pub values: Vec<f64>,
    /// Replications whose first draw had a singular sample covariance.
    pub redraws: usize,
}

/// Simulates `reps` datasets of `n` draws each and returns `n · D` per dataset.
///
/// Singular sample covariances are redrawn from the same stream and counted.
pub fn simulate_divergence_distribution(
    generator: Generator,
    d: usize,
    n: usize,
    reps: usize,
    seed: u64,
    map: Option<&AffineMap>,
) -> Result<Simulation> {
    if d == 0 || n <= d + 1 {
        return Err(Error::DomainError(format!("need n > d + 1 (n = {n}, d = {d})")));
    }
    let truth = match map {
        Some(map) => {
            if map.scale.shape() != (d, d) || map.shift.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: map.shift.len() });
            }
            MomentPair::new_symmetrized(map.shift.clone(), &map.scale * map.scale.transpose())?
        }
        None => MomentPair::new(DVector::zeros(d), DMatrix::identity(d, d))?,
    };

    let per_rep: Vec<Result<(f64, usize)>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(seed, rep as u64);
            for attempt in 0..=MAX_REDRAWS {
                let mut data = DMatrix::from_fn(n, d, |_, _| generator.draw(&mut rng));
                if let Some(map) = map {
                    data = (&data * map.scale.transpose()).map_with_location(|_, j, v| v + map.shift[j]);
                }
                let (mean, cov) = raw_moments(&data);
                if let Ok(empirical) = MomentPair::new(mean, cov) {
                    return Ok((n as f64 * divergence(&empirical, &truth)?, attempt));
                }
            }
            Err(Error::DegenerateSample(format!("replication {rep} stayed singular after {MAX_REDRAWS} redraws")))
        })
        .collect();

    let mut values = Vec::with_capacity(reps);
    let mut redraws = 0;
    for r in per_rep {
        let (v, attempts) = r?;
        values.push(v);
        redraws += attempts;
    }
    Ok(Simulation { values, redraws })
}
