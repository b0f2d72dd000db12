//! Moment divergence between (mean, covariance) pairs and the uncertainty
//! sets it induces.
//!
//! `D((μ₁,Σ₁)‖(μ₂,Σ₂)) = (μ₂−μ₁)ᵀΣ₂⁻¹(μ₂−μ₁) + Tr(Σ₁Σ₂⁻¹) − log det(Σ₁Σ₂⁻¹) − d`,
//! which is twice the KL divergence between the corresponding Gaussians.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{check_dim, MomentPair};

/// Round-off band below zero that is clamped to exactly zero.
pub const NEGATIVE_CLAMP: f64 = 1e-9;

/// Additive slack on membership tests.
pub const MEMBERSHIP_SLACK: f64 = 1e-9;

/// A nominal moment pair together with a radius `ρ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySpec {
    nominal: MomentPair,
    radius: f64,
}

impl AmbiguitySpec {
    pub fn new(nominal: MomentPair, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::DomainError(format!("radius must be finite and nonnegative, got {radius}")));
        }
        Ok(Self { nominal, radius })
    }

    pub fn nominal(&self) -> &MomentPair {
        &self.nominal
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.nominal.dim()
    }

    /// `ρ + d + log det Σ̂`, the right-hand side of the set in precision form.
    pub fn rho_bar(&self) -> f64 {
        self.radius + self.dim() as f64 + self.nominal.log_det()
    }
}

/// `D(from ‖ to)`. Asymmetric; the covariance metric is taken from `to`.
pub fn divergence(from: &MomentPair, to: &MomentPair) -> Result<f64> {
    let d = from.dim();
    check_dim(d, to.dim())?;
    let to_factor = to.factor();
    let mean_term = to_factor.quad_form(&(to.mean() - from.mean()));

    // M = L₂⁻¹ L₁ is lower triangular, Tr(Σ₁Σ₂⁻¹) = ‖M‖²_F and
    // log det(Σ₁Σ₂⁻¹) = 2 Σ log Mᵢᵢ.
    let l1 = from.factor().lower();
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        m.set_column(j, &to_factor.solve_lower(&l1.column(j).into_owned()));
    }
    let trace_term = m.norm_squared();
    let log_det_term = 2.0 * m.diagonal().iter().map(|v| v.ln()).sum::<f64>();

    let value = mean_term + trace_term - log_det_term - d as f64;
    if value >= 0.0 {
        Ok(value)
    } else if value >= -NEGATIVE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::InternalConsistency(format!("negative divergence {value:.3e}")))
    }
}

/// Membership of `candidate` in the uncertainty set: `D(nominal ‖ candidate) ≤ ρ + 1e-9`.
pub fn in_uncertainty_set(spec: &AmbiguitySpec, candidate: &MomentPair) -> Result<bool> {
    Ok(divergence(spec.nominal(), candidate)? <= spec.radius() + MEMBERSHIP_SLACK)
}

/// `KL(N(p) ‖ N(q))`.
pub fn kl_gaussian(p: &MomentPair, q: &MomentPair) -> Result<f64> {
    Ok(divergence(p, q)? / 2.0)
}
