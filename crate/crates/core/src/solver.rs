//! Optimistic scores over a moment-divergence ambiguity set.
//!
//! Both problems collapse to a strictly convex univariate program in a dual
//! variable `γ`, with `α = (x − μ̂)ᵀ Σ̂⁻¹ (x − μ̂)`:
//!
//! ```text
//! nonparametric:  φ₁(γ) = γρ − γ log(1 + α/(1+γ)),                          γ ≥ 0
//! Gaussian:       φ₂(γ) = γρ + d(γ+1) log(1 + 1/γ) − (1+γ) log(1 + α/(1+γ)), γ > 0
//! ```
//!
//! The optimal moments are then recovered in closed form from `γ*`.
//! The nonparametric score is `[1 + (μ*−x)ᵀ Σ*⁻¹ (μ*−x)]⁻¹`; the Gaussian
//! score is the translated log-likelihood `L = −(μ*−x)ᵀ Σ*⁻¹ (μ*−x) − log det Σ*`.

use nalgebra::DVector;

use crate::divergence::AmbiguitySpec;
use crate::error::{Error, Result};
use crate::linalg::{check_dim, CholeskyFactor, MomentPair};

/// Iteration cap for the safeguarded Newton phase.
pub const MAX_ITERATIONS: usize = 200;
/// Absolute tolerance on `|φ′(γ)|`.
pub const DERIVATIVE_TOL: f64 = 1e-10;
/// Relative tolerance on the bracket width, scaled by `1 + γ`.
pub const BRACKET_TOL: f64 = 1e-12;
/// Upper limit on the expanding bracket.
pub const GAMMA_CAP: f64 = 1e12;
/// Below this Mahalanobis value `x` is treated as the nominal mean.
pub const ALPHA_ZERO: f64 = 1e-14;
/// Stand-in for an infinite multiplier in [`project_mean`] when `ε = 0`.
pub const LAMBDA_SENTINEL: f64 = 1e300;

/// Which plausibility score the ambiguity set is optimized for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreMode {
    /// Probability mass of the singleton `{x}` over all distributions.
    Nonparametric,
    /// Gaussian likelihood over Gaussian members of the set.
    Gaussian,
}

impl ScoreMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMode::Nonparametric => "nonparam",
            ScoreMode::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for ScoreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonparam" | "nonparametric" => Ok(ScoreMode::Nonparametric),
            "gaussian" => Ok(ScoreMode::Gaussian),
            other => Err(Error::InvalidInput(format!("unknown score mode '{other}'"))),
        }
    }
}

/// Optimal dual multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaStar {
    Finite(f64),
    /// The `ρ = 0` limit, where the optimum is only approached as `γ → ∞`.
    AtInfinity,
}

impl GammaStar {
    pub fn finite(self) -> Option<f64> {
        match self {
            GammaStar::Finite(g) => Some(g),
            GammaStar::AtInfinity => None,
        }
    }
}

/// Value and first two derivatives of a univariate objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiEval {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

/// Outcome of [`minimize_phi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimizer {
    pub gamma_star: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub gamma_star: GammaStar,
    /// Optimal moments `(μ*, Σ*)`.
    pub optimizer: MomentPair,
    /// Probability in `[0, 1]` (nonparametric) or the translated log-likelihood `L` (Gaussian).
    pub score: f64,
    /// Log of the score on the scale used by the ratio: `−log(1 + q*)` or `L/2`.
    pub log_score: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Nonparametric dual objective and its derivatives.
pub fn phi1(gamma: f64, rho: f64, alpha: f64) -> PhiEval {
    let g1 = 1.0 + gamma;
    let g1a = g1 + alpha;
    let log_term = (alpha / g1).ln_1p();
    PhiEval {
        value: gamma * rho - gamma * log_term,
        first: rho - log_term + gamma * alpha / (g1 * g1a),
        second: alpha * (2.0 + 2.0 * gamma + 2.0 * alpha + alpha * gamma) / (g1 * g1 * g1a * g1a),
    }
}

/// Gaussian dual objective and its derivatives; defined for `γ > 0` only.
pub fn phi2(gamma: f64, rho: f64, alpha: f64, d: usize) -> Result<PhiEval> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::DomainError(format!("phi2 requires gamma > 0, got {gamma}")));
    }
    let d = d as f64;
    let g1 = 1.0 + gamma;
    let g1a = g1 + alpha;
    let log_inv = (1.0 / gamma).ln_1p();
    let log_term = (alpha / g1).ln_1p();
    Ok(PhiEval {
        value: gamma * rho + d * g1 * log_inv - g1 * log_term,
        first: rho + d * (log_inv - 1.0 / gamma) - (log_term - alpha / g1a),
        second: d / (gamma * gamma * g1) + alpha * alpha / (g1a * g1a * g1),
    })
}

fn derivative(mode: ScoreMode, gamma: f64, rho: f64, alpha: f64, d: usize) -> PhiEval {
    match mode {
        ScoreMode::Nonparametric => phi1(gamma, rho, alpha),
        // callers only pass gamma > 0 here
        ScoreMode::Gaussian => phi2(gamma, rho, alpha, d).expect("gamma > 0"),
    }
}

/// Minimizes `φ₁` or `φ₂` over its domain.
///
/// The minimizer is bracketed by doubling (or halving) from `γ = 1` until
/// `φ′` changes sign, then refined by Newton steps that fall back to
/// bisection whenever a step leaves the bracket.
pub fn minimize_phi(mode: ScoreMode, rho: f64, alpha: f64, d: usize) -> Result<Minimizer> {
    if !(rho.is_finite() && rho >= 0.0) || !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::DomainError(format!("need finite rho >= 0 and alpha >= 0 (rho {rho}, alpha {alpha})")));
    }
    let (mut lo, mut hi) = match mode {
        ScoreMode::Nonparametric => {
            let slope0 = rho - alpha.ln_1p();
            if slope0 >= 0.0 {
                return Ok(Minimizer { gamma_star: 0.0, residual: 0.0, iterations: 0 });
            }
            if rho == 0.0 {
                return Err(Error::DomainError("nonparametric minimizer is at infinity when rho = 0".into()));
            }
            expand_upward(mode, 0.0, rho, alpha, d)?
        }
        ScoreMode::Gaussian => {
            if rho <= 0.0 {
                return Err(Error::DomainError("Gaussian dual problem requires rho > 0".into()));
            }
            if derivative(mode, 1.0, rho, alpha, d).first < 0.0 {
                expand_upward(mode, 1.0, rho, alpha, d)?
            } else {
                let mut hi = 1.0;
                let mut lo = 0.5;
                while derivative(mode, lo, rho, alpha, d).first >= 0.0 {
                    hi = lo;
                    lo *= 0.5;
                    if lo < f64::MIN_POSITIVE {
                        return Err(Error::NoConvergence { iterations: 0, residual: f64::INFINITY });
                    }
                }
                (lo, hi)
            }
        }
    };

    let mut gamma = 0.5 * (lo + hi);
    for iteration in 1..=MAX_ITERATIONS {
        let eval = derivative(mode, gamma, rho, alpha, d);
        let f = eval.first;
        if f.abs() <= DERIVATIVE_TOL {
            return Ok(Minimizer { gamma_star: gamma, residual: f.abs(), iterations: iteration });
        }
        if f < 0.0 {
            lo = gamma;
        } else {
            hi = gamma;
        }
        if hi - lo <= BRACKET_TOL * (1.0 + gamma) {
            return Ok(Minimizer { gamma_star: gamma, residual: f.abs(), iterations: iteration });
        }
        let newton = gamma - f / eval.second;
        gamma = if eval.second > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    let residual = derivative(mode, gamma, rho, alpha, d).first.abs();
    Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual })
}

/// Doubles from `γ = 1` until `φ′ ≥ 0`; returns the sign-change bracket.
fn expand_upward(mode: ScoreMode, floor: f64, rho: f64, alpha: f64, d: usize) -> Result<(f64, f64)> {
    let mut lo = floor;
    let mut hi: f64 = 1.0_f64.max(floor);
    if hi == floor {
        hi *= 2.0;
    }
    loop {
        let f = derivative(mode, hi, rho, alpha, d).first;
        if f >= 0.0 {
            return Ok((lo, hi));
        }
        lo = hi;
        hi *= 2.0;
        if hi > GAMMA_CAP {
            return Err(Error::NoConvergence { iterations: 0, residual: f.abs() });
        }
    }
}

/// Largest probability any distribution in the ambiguity set assigns to `{x}`.
pub fn optimistic_nonparam_score(x: &DVector<f64>, spec: &AmbiguitySpec) -> Result<SolverResult> {
    let nominal = spec.nominal();
    check_dim(nominal.dim(), x.len())?;
    let w = x - nominal.mean();
    let alpha = nominal.factor().quad_form(&w);
    let rho = spec.radius();

    if alpha <= ALPHA_ZERO {
        return Ok(SolverResult {
            gamma_star: GammaStar::Finite(0.0),
            optimizer: nominal.clone(),
            score: 1.0,
            log_score: 0.0,
            alpha,
            iterations: 0,
            residual: 0.0,
        });
    }
    if rho == 0.0 {
        return Ok(SolverResult {
            gamma_star: GammaStar::AtInfinity,
            optimizer: nominal.clone(),
            score: 1.0 / (1.0 + alpha),
            log_score: -alpha.ln_1p(),
            alpha,
            iterations: 0,
            residual: 0.0,
        });
    }

    let min = minimize_phi(ScoreMode::Nonparametric, rho, alpha, nominal.dim())?;
    let gamma = min.gamma_star;
    let mean = (x + nominal.mean() * gamma) / (1.0 + gamma);
    let mut cov = nominal.cov().clone();
    cov.ger(1.0 / (1.0 + gamma), &w, &w, 1.0);
    let optimizer = MomentPair::new_symmetrized(mean, cov)?;
    let q = optimizer.factor().quad_form(&(optimizer.mean() - x));
    Ok(SolverResult {
        gamma_star: GammaStar::Finite(gamma),
        optimizer,
        score: 1.0 / (1.0 + q),
        log_score: -q.ln_1p(),
        alpha,
        iterations: min.iterations,
        residual: min.residual,
    })
}

/// Largest translated Gaussian log-likelihood of `x` over Gaussian members of the set.
pub fn optimistic_gaussian_loglik(x: &DVector<f64>, spec: &AmbiguitySpec) -> Result<SolverResult> {
    let nominal = spec.nominal();
    check_dim(nominal.dim(), x.len())?;
    let w = x - nominal.mean();
    let alpha = nominal.factor().quad_form(&w);
    let rho = spec.radius();

    if rho == 0.0 {
        let score = -alpha - nominal.log_det();
        return Ok(SolverResult {
            gamma_star: GammaStar::AtInfinity,
            optimizer: nominal.clone(),
            score,
            log_score: 0.5 * score,
            alpha,
            iterations: 0,
            residual: 0.0,
        });
    }

    let min = minimize_phi(ScoreMode::Gaussian, rho, alpha, nominal.dim())?;
    let gamma = min.gamma_star;
    let g1 = 1.0 + gamma;
    let mean = (x + nominal.mean() * gamma) / g1;
    let mut cov = nominal.cov() * (gamma / g1);
    cov.ger(gamma / (g1 * g1), &w, &w, 1.0);
    let optimizer = MomentPair::new_symmetrized(mean, cov)?;
    let score = gaussian_loglik(&optimizer, x);
    Ok(SolverResult {
        gamma_star: GammaStar::Finite(gamma),
        optimizer,
        score,
        log_score: 0.5 * score,
        alpha,
        iterations: min.iterations,
        residual: min.residual,
    })
}

/// Dispatches on the score mode.
pub fn optimistic_score(mode: ScoreMode, x: &DVector<f64>, spec: &AmbiguitySpec) -> Result<SolverResult> {
    match mode {
        ScoreMode::Nonparametric => optimistic_nonparam_score(x, spec),
        ScoreMode::Gaussian => optimistic_gaussian_loglik(x, spec),
    }
}

/// `−(μ − x)ᵀ Σ⁻¹ (μ − x) − log det Σ`.
pub fn gaussian_loglik(moments: &MomentPair, x: &DVector<f64>) -> f64 {
    -moments.factor().quad_form(&(moments.mean() - x)) - moments.log_det()
}

/// Closest point to `x`, in the `Ω = Σ⁻¹` metric, within the ellipsoid
/// `(μ − μ̂)ᵀ Ω (μ − μ̂) ≤ ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanProjection {
    pub mu_star: DVector<f64>,
    pub lambda_star: f64,
    /// Optimal value `(μ* − x)ᵀ Ω (μ* − x)`.
    pub g_value: f64,
}

/// Closed-form mean projection. `sigma` factors `Σ`, so the metric is `Σ⁻¹`.
///
/// For `ε = 0` the multiplier is infinite; [`LAMBDA_SENTINEL`] is reported and
/// `μ* = μ̂`.
pub fn project_mean(
    sigma: &CholeskyFactor,
    mu_hat: &DVector<f64>,
    x: &DVector<f64>,
    epsilon: f64,
) -> Result<MeanProjection> {
    check_dim(sigma.dim(), mu_hat.len())?;
    check_dim(sigma.dim(), x.len())?;
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::DomainError(format!("epsilon must be finite and nonnegative, got {epsilon}")));
    }
    let w = x - mu_hat;
    let a = sigma.quad_form(&w);
    if epsilon >= a {
        return Ok(MeanProjection { mu_star: x.clone(), lambda_star: 0.0, g_value: 0.0 });
    }
    if epsilon == 0.0 {
        return Ok(MeanProjection { mu_star: mu_hat.clone(), lambda_star: LAMBDA_SENTINEL, g_value: a });
    }
    let lambda = (a / epsilon).sqrt() - 1.0;
    let g = (epsilon.sqrt() - a.sqrt()).powi(2);
    Ok(MeanProjection { mu_star: (x + mu_hat * lambda) / (1.0 + lambda), lambda_star: lambda, g_value: g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{divergence, in_uncertainty_set};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
        let (fp, f0, fm) = (f(x + h), f(x), f(x - h));
        ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-8)
    }

    fn scalar_spec(mean: f64, var: f64, rho: f64) -> AmbiguitySpec {
        AmbiguitySpec::new(MomentPair::from_slices(&[mean], &[var]).unwrap(), rho).unwrap()
    }

    #[test]
    fn phi1_at_zero_and_without_alpha() {
        let e = phi1(0.0, 0.7, 3.0);
        assert_eq!(e.value, 0.0);
        assert_relative_eq!(e.first, 0.7 - 4f64.ln(), epsilon = 1e-15);
        let e = phi1(2.5, 0.3, 0.0);
        assert_eq!((e.value, e.first, e.second), (0.75, 0.3, 0.0));
    }

    #[test]
    fn phi1_matches_finite_differences() {
        let e = phi1(1.0, 0.2, 1.0);
        assert_relative_eq!(e.value, 0.2 - 1.5f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(e.value, -0.20546510810816438, epsilon = 1e-12);
        let (d1, _) = fd(|g| phi1(g, 0.2, 1.0).value, 1.0, 1e-5);
        let (_, d2) = fd(|g| phi1(g, 0.2, 1.0).value, 1.0, 1e-4);
        assert!(rel_err(e.first, d1) <= 1e-5);
        assert!(rel_err(e.second, d2) <= 1e-5);
    }

    #[test]
    fn phi2_examples() {
        let e = phi2(1.0, 0.8, 0.0, 1).unwrap();
        assert_relative_eq!(e.value, 0.8 + 2.0 * 2f64.ln(), epsilon = 1e-14);
        assert!(phi2(0.0, 1.0, 1.0, 1).is_err());
        assert!(phi2(-1.0, 1.0, 1.0, 1).is_err());
        for gamma in [0.1, 1.0, 10.0] {
            let e = phi2(gamma, 0.5, 2.0, 3).unwrap();
            let (d1, _) = fd(|g| phi2(g, 0.5, 2.0, 3).unwrap().value, gamma, 1e-5);
            assert!(rel_err(e.first, d1) <= 1e-5, "gamma {gamma}");
            // φ″ = d/dγ φ′, differenced on the analytic first derivative
            let (d2, _) = fd(|g| phi2(g, 0.5, 2.0, 3).unwrap().first, gamma, 1e-5);
            assert!(rel_err(e.second, d2) <= 1e-5, "gamma {gamma}");
        }
        let far = phi2(1e6, 1.0, 1.0, 2).unwrap().value;
        let near = phi2(1e3, 1.0, 1.0, 2).unwrap().value;
        assert!(far > near);
    }

    #[test]
    fn minimize_nonparam_saturated() {
        let m = minimize_phi(ScoreMode::Nonparametric, 5f64.ln(), 4.0, 1).unwrap();
        assert_eq!(m.gamma_star, 0.0);
        let m = minimize_phi(ScoreMode::Nonparametric, 2.0, 4.0, 1).unwrap();
        assert_eq!(m.gamma_star, 0.0);
    }

    /// Bisection on `log(1 + 1/γ) − 1/γ = −1`, the stationarity condition for
    /// α = 0, d = 1, ρ = 1.
    fn gaussian_reference_gamma() -> f64 {
        let h = |g: f64| (1.0 / g).ln_1p() - 1.0 / g + 1.0;
        let (mut lo, mut hi) = (1e-3, 10.0);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if h(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn minimize_gaussian_reference() {
        let reference = gaussian_reference_gamma();
        assert!((reference - 0.466).abs() < 1e-3);
        let m = minimize_phi(ScoreMode::Gaussian, 1.0, 0.0, 1).unwrap();
        assert_relative_eq!(m.gamma_star, reference, epsilon = 1e-9);
        assert!(m.residual <= 1e-10);
    }

    #[test]
    fn minimize_nonparam_against_grid() {
        let m = minimize_phi(ScoreMode::Nonparametric, 0.2, 1.0, 1).unwrap();
        assert!(m.residual <= 1e-10);
        let n = 1_000_000;
        let (lmin, lmax) = (-8f64, 3f64);
        let mut best = phi1(0.0, 0.2, 1.0).value;
        for i in 0..n {
            let g = 10f64.powf(lmin + (lmax - lmin) * i as f64 / (n - 1) as f64);
            best = best.min(phi1(g, 0.2, 1.0).value);
        }
        let ours = phi1(m.gamma_star, 0.2, 1.0).value;
        assert!(ours <= best + 1e-12);
        assert!((ours - best).abs() <= 1e-8);
    }

    #[test]
    fn minimize_domain_errors() {
        assert!(matches!(minimize_phi(ScoreMode::Gaussian, 0.0, 1.0, 2), Err(Error::DomainError(_))));
        assert!(matches!(minimize_phi(ScoreMode::Nonparametric, -1.0, 1.0, 2), Err(Error::DomainError(_))));
    }

    #[test]
    fn nonparam_trivial_cases() {
        let spec = scalar_spec(0.0, 1.0, 0.3);
        let r = optimistic_nonparam_score(&DVector::from_vec(vec![0.0]), &spec).unwrap();
        assert_eq!(r.score, 1.0);
        assert_eq!(r.optimizer, spec.nominal().clone());

        let spec = scalar_spec(0.0, 1.0, 0.0);
        let r = optimistic_nonparam_score(&DVector::from_vec(vec![1.0]), &spec).unwrap();
        assert_eq!(r.score, 0.5);
        assert_eq!(r.gamma_star, GammaStar::AtInfinity);
    }

    #[test]
    fn nonparam_saturated_example() {
        let spec = scalar_spec(0.0, 1.0, 2.0);
        let r = optimistic_nonparam_score(&DVector::from_vec(vec![2.0]), &spec).unwrap();
        assert_eq!(r.gamma_star, GammaStar::Finite(0.0));
        assert_eq!(r.alpha, 4.0);
        assert_eq!(r.score, 1.0);
        assert_eq!(r.optimizer.mean()[0], 2.0);
        assert_relative_eq!(r.optimizer.cov()[(0, 0)], 5.0, epsilon = 1e-14);
        let dv = divergence(spec.nominal(), &r.optimizer).unwrap();
        assert_relative_eq!(dv, 5f64.ln(), epsilon = 1e-12);
        assert!(in_uncertainty_set(&spec, &r.optimizer).unwrap());
    }

    #[test]
    fn nonparam_active_constraint() {
        let spec = scalar_spec(0.5, 2.0, 0.3);
        let r = optimistic_nonparam_score(&DVector::from_vec(vec![4.0]), &spec).unwrap();
        let g = r.gamma_star.finite().unwrap();
        assert!(g > 0.0);
        assert!(r.score < 1.0);
        assert!((divergence(spec.nominal(), &r.optimizer).unwrap() - 0.3).abs() <= 1e-6);
    }

    #[test]
    fn gaussian_zero_radius() {
        let nominal = MomentPair::from_slices(&[1.0, -1.0], &[2.0, 0.3, 0.3, 1.0]).unwrap();
        let spec = AmbiguitySpec::new(nominal.clone(), 0.0).unwrap();
        let x = DVector::from_vec(vec![0.0, 0.5]);
        let r = optimistic_gaussian_loglik(&x, &spec).unwrap();
        let alpha = nominal.mahalanobis(&x).unwrap();
        assert_relative_eq!(r.score, -alpha - nominal.log_det(), epsilon = 1e-14);
        assert_eq!(r.optimizer, nominal);
        assert_eq!(r.gamma_star, GammaStar::AtInfinity);
    }

    #[test]
    fn gaussian_at_nominal_mean() {
        let spec = scalar_spec(0.0, 1.0, 1.0);
        let r = optimistic_gaussian_loglik(&DVector::from_vec(vec![0.0]), &spec).unwrap();
        let reference = gaussian_reference_gamma();
        let g = r.gamma_star.finite().unwrap();
        assert_relative_eq!(g, reference, epsilon = 1e-9);
        let cov_ref = reference / (1.0 + reference);
        assert_relative_eq!(r.optimizer.cov()[(0, 0)], cov_ref, epsilon = 1e-9);
        assert!((r.optimizer.cov()[(0, 0)] - 0.3179).abs() < 1e-3);
        assert_relative_eq!(r.score, -cov_ref.ln(), epsilon = 1e-9);
        assert!((r.score - 1.146).abs() < 1e-3);
        assert!((divergence(spec.nominal(), &r.optimizer).unwrap() - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn gaussian_random_instance_against_grid() {
        let nominal = MomentPair::from_slices(&[0.3, -0.2], &[1.5, 0.4, 0.4, 0.8]).unwrap();
        let spec = AmbiguitySpec::new(nominal.clone(), 0.45).unwrap();
        let x = DVector::from_vec(vec![1.7, 0.9]);
        let r = optimistic_gaussian_loglik(&x, &spec).unwrap();
        let alpha = nominal.mahalanobis(&x).unwrap();
        let n = 1_000_000;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..n {
            let g = 10f64.powf(-8.0 + 16.0 * i as f64 / (n - 1) as f64);
            let v = phi2(g, 0.45, alpha, 2).unwrap().value;
            if v < best.0 {
                best = (v, g);
            }
        }
        // dual optimal value → translated log-likelihood
        let dual = best.0 - 2.0 - nominal.log_det();
        assert!((r.score - dual).abs() <= 1e-6);
        // primal point built from the grid minimizer
        let g = best.1;
        let w = &x - nominal.mean();
        let mean = (&x + nominal.mean() * g) / (1.0 + g);
        let cov = nominal.cov() * (g / (1.0 + g)) + &w * w.transpose() * (g / (1.0 + g).powi(2));
        let grid_pair = MomentPair::new_symmetrized(mean, cov).unwrap();
        assert!((r.score - gaussian_loglik(&grid_pair, &x)).abs() <= 1e-3);
    }

    #[test]
    fn project_mean_examples() {
        let f = crate::linalg::cholesky(&DMatrix::identity(1, 1)).unwrap();
        let mu = DVector::from_vec(vec![0.0]);
        let x = DVector::from_vec(vec![3.0]);
        let p = project_mean(&f, &mu, &x, 1.0).unwrap();
        assert_relative_eq!(p.lambda_star, 2.0, epsilon = 1e-15);
        assert_relative_eq!(p.mu_star[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.g_value, 4.0, epsilon = 1e-14);

        let p = project_mean(&f, &mu, &x, 9.0).unwrap();
        assert_eq!((p.lambda_star, p.mu_star[0], p.g_value), (0.0, 3.0, 0.0));

        let p = project_mean(&f, &mu, &mu, 0.5).unwrap();
        assert_eq!((p.lambda_star, p.mu_star[0], p.g_value), (0.0, 0.0, 0.0));

        let p = project_mean(&f, &mu, &x, 0.0).unwrap();
        assert_eq!(p.lambda_star, LAMBDA_SENTINEL);
        assert_eq!(p.mu_star[0], 0.0);
        assert_eq!(p.g_value, 9.0);
    }

    fn spd2() -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-1.5f64..1.5, 4).prop_map(|v| {
            let a = DMatrix::from_row_slice(2, 2, &v);
            &a * a.transpose() + DMatrix::identity(2, 2) * 0.3
        })
    }

    proptest! {
        #[test]
        fn convexity_witness(rho in 0.0f64..3.0, alpha in 0.0f64..10.0, d in 1usize..20, lg in -3.0f64..4.0) {
            let g = 10f64.powf(lg);
            prop_assert!(phi1(g, rho, alpha).second >= -1e-12);
            prop_assert!(phi2(g, rho, alpha, d).unwrap().second >= -1e-12);
        }

        #[test]
        fn project_mean_feasible(
            cov in spd2(),
            mu in proptest::collection::vec(-2.0f64..2.0, 2),
            x in proptest::collection::vec(-4.0f64..4.0, 2),
            eps in 0.0f64..3.0,
        ) {
            let f = crate::linalg::cholesky(&cov).unwrap();
            let mu = DVector::from_vec(mu);
            let x = DVector::from_vec(x);
            let p = project_mean(&f, &mu, &x, eps).unwrap();
            prop_assert!(f.quad_form(&(&p.mu_star - &mu)) <= eps + 1e-9);
            let g_direct = f.quad_form(&(&p.mu_star - &x));
            prop_assert!((g_direct - p.g_value).abs() <= 1e-9 * (1.0 + g_direct));
        }

        #[test]
        fn nonparam_mean_matches_projection(
            cov in spd2(),
            mu in proptest::collection::vec(-2.0f64..2.0, 2),
            x in proptest::collection::vec(-4.0f64..4.0, 2),
            rho in 0.01f64..1.0,
        ) {
            let nominal = MomentPair::new(DVector::from_vec(mu), cov).unwrap();
            let spec = AmbiguitySpec::new(nominal.clone(), rho).unwrap();
            let x = DVector::from_vec(x);
            let r = optimistic_nonparam_score(&x, &spec).unwrap();
            if let GammaStar::Finite(g) = r.gamma_star {
                if g > 0.0 {
                    // covariance share of the divergence at Σ*, with the mean pinned at μ̂
                    let cov_only = MomentPair::new(nominal.mean().clone(), r.optimizer.cov().clone()).unwrap();
                    let cov_part = divergence(&nominal, &cov_only).unwrap();
                    let eps = (rho - cov_part).max(0.0);
                    let p = project_mean(r.optimizer.factor(), nominal.mean(), &x, eps).unwrap();
                    prop_assert!((&p.mu_star - r.optimizer.mean()).amax() <= 1e-7);
                }
            }
        }
    }
}
