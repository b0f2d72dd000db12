//! Optimistic score ratio classifier and classical baselines.
//!
//! Everything is kept in log space: a point gets label 1 iff
//! `log R(x) ≥ log τ`.

mod baseline;
mod cv;
mod threshold;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

pub use baseline::{baseline_discriminant, baseline_predict, pooled_covariance, ridge, BaselineKind, BaselineModel};
pub use cv::{cross_validate, cross_validate_with, holdout_trials, stratified_folds, CvOutcome, HoldoutMethod, HoldoutReport};
pub use threshold::{threshold_objective, tune_threshold};

use crate::calibration::clt_radius;
use crate::divergence::AmbiguitySpec;
use crate::error::{Error, Result};
use crate::linalg::{check_dim, jitter_covariance, ledoit_wolf_raw, raw_moments, Dataset, MomentPair};
use crate::solver::{optimistic_score, ScoreMode};

/// Default number of cross-validation folds.
pub const DEFAULT_FOLDS: usize = 5;

/// Default CV grid: 9 log-spaced radii from 1e-3 to 1e1.
pub fn default_radius_grid() -> Vec<f64> {
    (0..9).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovarianceEstimator {
    Sample,
    LedoitWolf,
}

impl CovarianceEstimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sample => "sample",
            Self::LedoitWolf => "ledoit-wolf",
        }
    }
}

impl fmt::Display for CovarianceEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CovarianceEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(Self::Sample),
            "ledoit-wolf" | "ledoit_wolf" | "lw" => Ok(Self::LedoitWolf),
            other => Err(Error::InvalidInput(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Nominal moments of one class under the chosen estimator.
///
/// With `jitter`, `1e-8·Tr(Σ)/d·I` is added before the definiteness check.
pub fn estimate_moments(data: &DMatrix<f64>, estimator: CovarianceEstimator, jitter: bool) -> Result<MomentPair> {
    if data.nrows() < 2 {
        return Err(Error::DegenerateSample(format!("need at least 2 rows, got {}", data.nrows())));
    }
    let (mean, mut cov) = match estimator {
        CovarianceEstimator::Sample => raw_moments(data),
        CovarianceEstimator::LedoitWolf => ledoit_wolf_raw(data)?,
    };
    if jitter {
        cov = jitter_covariance(&cov);
    }
    MomentPair::new_symmetrized(mean, cov).map_err(|e| match e {
        Error::NotPositiveDefinite { row, pivot } => Error::DegenerateSample(format!(
            "{estimator} covariance is not positive definite (pivot {pivot:.3e} at row {row})"
        )),
        other => other,
    })
}

/// How the two radii are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiusPolicy {
    /// `ρ_c = χ²_α(d(d+3)/2) / n_c`.
    Clt { alpha: f64 },
    /// Shared radius picked by stratified k-fold CV.
    CrossValidation { grid: Vec<f64>, folds: usize },
    Fixed { rho0: f64, rho1: f64 },
}

impl RadiusPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Clt { alpha } if !(*alpha > 0.0 && *alpha < 1.0) => {
                Err(Error::DomainError(format!("CLT level must be in (0,1), got {alpha}")))
            }
            Self::CrossValidation { grid, .. } if grid.is_empty() => {
                Err(Error::InvalidInput("radius grid is empty".into()))
            }
            Self::CrossValidation { grid, .. } if grid.iter().any(|r| !(r.is_finite() && *r >= 0.0)) => {
                Err(Error::DomainError("grid radii must be finite and nonnegative".into()))
            }
            Self::CrossValidation { folds, .. } if *folds < 2 => {
                Err(Error::InvalidInput(format!("need at least 2 folds, got {folds}")))
            }
            Self::Fixed { rho0, rho1 } if !(rho0.is_finite() && rho1.is_finite() && *rho0 >= 0.0 && *rho1 >= 0.0) => {
                Err(Error::DomainError(format!("fixed radii must be nonnegative, got {rho0}, {rho1}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for RadiusPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Clt { alpha } => write!(f, "clt:{alpha}"),
            Self::CrossValidation { grid, folds } => {
                let grid: Vec<String> = grid.iter().map(f64::to_string).collect();
                write!(f, "cv:{folds}:{}", grid.join(","))
            }
            Self::Fixed { rho0, rho1 } => write!(f, "fixed:{rho0},{rho1}"),
        }
    }
}

impl FromStr for RadiusPolicy {
    type Err = Error;

    /// Parses `clt:ALPHA`, `cv:FOLDS:R1,R2,...` or `fixed:R0,R1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse radius policy '{s}'"));
        let floats = |t: &str| -> Result<Vec<f64>> {
            t.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect()
        };
        let policy = if let Some(rest) = s.strip_prefix("clt:") {
            Self::Clt { alpha: rest.parse().map_err(|_| bad())? }
        } else if let Some(rest) = s.strip_prefix("cv:") {
            let (folds, grid) = rest.split_once(':').ok_or_else(bad)?;
            Self::CrossValidation { grid: floats(grid)?, folds: folds.parse().map_err(|_| bad())? }
        } else if let Some(rest) = s.strip_prefix("fixed:") {
            match floats(rest)?.as_slice() {
                &[rho0, rho1] => Self::Fixed { rho0, rho1 },
                _ => return Err(bad()),
            }
        } else {
            return Err(bad());
        };
        policy.validate()?;
        Ok(policy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: ScoreMode,
    pub policy: RadiusPolicy,
    pub estimator: CovarianceEstimator,
    pub jitter: bool,
    /// When false the threshold stays at `log τ = 0`.
    pub tune_threshold: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(mode: ScoreMode, policy: RadiusPolicy) -> Self {
        Self {
            mode,
            policy,
            estimator: CovarianceEstimator::LedoitWolf,
            jitter: false,
            tune_threshold: true,
            seed: 0,
        }
    }
}

/// A trained optimistic score ratio classifier. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub mode: ScoreMode,
    pub spec0: AmbiguitySpec,
    pub spec1: AmbiguitySpec,
    pub log_threshold: f64,
    pub estimator: CovarianceEstimator,
    pub radius_policy: String,
    pub seed: u64,
}

impl ClassifierModel {
    /// Assembles a model from its parts, checking dimensions and the threshold.
    pub fn from_parts(mode: ScoreMode, spec0: AmbiguitySpec, spec1: AmbiguitySpec, log_threshold: f64) -> Result<Self> {
        check_dim(spec0.dim(), spec1.dim())?;
        if !log_threshold.is_finite() {
            return Err(Error::DomainError(format!("log threshold must be finite, got {log_threshold}")));
        }
        Ok(Self {
            mode,
            spec0,
            spec1,
            log_threshold,
            estimator: CovarianceEstimator::Sample,
            radius_policy: "fixed".into(),
            seed: 0,
        })
    }

    pub fn dimension(&self) -> usize {
        self.spec0.dim()
    }

    /// The same model with class labels swapped and the threshold negated.
    pub fn swapped(&self) -> Self {
        Self {
            spec0: self.spec1.clone(),
            spec1: self.spec0.clone(),
            log_threshold: -self.log_threshold,
            ..self.clone()
        }
    }
}

/// `log R(x)`: `log(1+q₀) − log(1+q₁)` for the nonparametric score,
/// `½(L₁* − L₀*)` for the Gaussian one.
pub fn log_ratio(model: &ClassifierModel, x: &DVector<f64>) -> Result<f64> {
    check_dim(model.dimension(), x.len())?;
    let s0 = optimistic_score(model.mode, x, &model.spec0)?;
    let s1 = optimistic_score(model.mode, x, &model.spec1)?;
    let r = s1.log_score - s0.log_score;
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::InternalConsistency(format!("non-finite log-ratio {r}")))
    }
}

/// `1{log R(x) ≥ log τ}`.
pub fn predict(model: &ClassifierModel, x: &DVector<f64>) -> Result<u8> {
    Ok(u8::from(log_ratio(model, x)? >= model.log_threshold))
}

/// Anything with a scalar decision function compared against a threshold.
pub trait Classifier {
    fn dim(&self) -> usize;

    fn decision(&self, x: &DVector<f64>) -> Result<f64>;

    fn threshold(&self) -> f64;

    /// Label 1 iff the decision is at or above the threshold.
    fn predict(&self, x: &DVector<f64>) -> Result<u8> {
        Ok(u8::from(self.decision(x)? >= self.threshold()))
    }
}

impl Classifier for ClassifierModel {
    fn dim(&self) -> usize {
        self.dimension()
    }

    fn decision(&self, x: &DVector<f64>) -> Result<f64> {
        log_ratio(self, x)
    }

    fn threshold(&self) -> f64 {
        self.log_threshold
    }
}

/// Fraction of rows whose predicted label matches.
pub fn ccr<C: Classifier + ?Sized>(model: &C, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_dim(model.dim(), data.dim())?;
    let mut correct = 0usize;
    for i in 0..data.len() {
        if model.predict(&data.row(i))? == data.labels()[i] {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

fn check_classes(data: &Dataset) -> Result<[usize; 2]> {
    let d = data.dim();
    let counts = [data.class_count(0), data.class_count(1)];
    for (class, &n) in counts.iter().enumerate() {
        if n == 0 {
            return Err(Error::ClassMissing(class as u8));
        }
        if n < d + 1 {
            return Err(Error::DegenerateSample(format!("class {class} has {n} samples, need at least {}", d + 1)));
        }
    }
    Ok(counts)
}

/// Trains a model: nominal moments per class, radii from the policy, then
/// the threshold that maximizes training accuracy.
pub fn train(data: &Dataset, config: &TrainConfig) -> Result<ClassifierModel> {
    config.policy.validate()?;
    let counts = check_classes(data)?;
    let d = data.dim();
    let (rho0, rho1) = match &config.policy {
        RadiusPolicy::Clt { alpha } => (clt_radius(counts[0], d, *alpha)?, clt_radius(counts[1], d, *alpha)?),
        RadiusPolicy::Fixed { rho0, rho1 } => (*rho0, *rho1),
        RadiusPolicy::CrossValidation { grid, folds } => {
            let outcome = cross_validate(data, config, grid, *folds, config.seed)?;
            (outcome.best_radius, outcome.best_radius)
        }
    };
    let m0 = estimate_moments(&data.class_features(0), config.estimator, config.jitter)?;
    let m1 = estimate_moments(&data.class_features(1), config.estimator, config.jitter)?;
    let mut model = ClassifierModel::from_parts(
        config.mode,
        AmbiguitySpec::new(m0, rho0)?,
        AmbiguitySpec::new(m1, rho1)?,
        0.0,
    )?;
    model.estimator = config.estimator;
    model.radius_policy = config.policy.to_string();
    model.seed = config.seed;
    if config.tune_threshold {
        let (r0, r1) = baseline::split_decisions(&model, data)?;
        model.log_threshold = tune_threshold(&r0, &r1)?;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(mean: f64, var: f64) -> MomentPair {
        MomentPair::from_slices(&[mean], &[var]).unwrap()
    }

    fn model(mode: ScoreMode, m0: MomentPair, rho0: f64, m1: MomentPair, rho1: f64) -> ClassifierModel {
        ClassifierModel::from_parts(mode, AmbiguitySpec::new(m0, rho0).unwrap(), AmbiguitySpec::new(m1, rho1).unwrap(), 0.0)
            .unwrap()
    }

    #[test]
    fn identical_specs_give_zero_ratio() {
        for mode in [ScoreMode::Nonparametric, ScoreMode::Gaussian] {
            let m = model(mode, scalar(0.3, 2.0), 0.1, scalar(0.3, 2.0), 0.1);
            for x in [-3.0, 0.0, 0.3, 7.0] {
                let x = DVector::from_vec(vec![x]);
                assert_eq!(log_ratio(&m, &x).unwrap(), 0.0);
                assert_eq!(predict(&m, &x).unwrap(), 1);
            }
        }
    }

    #[test]
    fn zero_radius_nonparametric_ratio() {
        let m = model(ScoreMode::Nonparametric, scalar(0.0, 1.0), 0.0, scalar(2.0, 1.0), 0.0);
        let r = log_ratio(&m, &DVector::from_vec(vec![0.0])).unwrap();
        // (1 + 4) / (1 + 0)
        assert_relative_eq!(r, -(5f64.ln()), epsilon = 1e-14);
    }

    #[test]
    fn zero_radius_gaussian_is_qda() {
        let (m0, m1) = (scalar(0.0, 1.0), scalar(2.0, 3.0));
        let m = model(ScoreMode::Gaussian, m0.clone(), 0.0, m1.clone(), 0.0);
        for x in [-1.0, 0.5, 2.5] {
            let xv = DVector::from_vec(vec![x]);
            let a0 = x * x;
            let a1 = (x - 2.0) * (x - 2.0) / 3.0;
            let expected = 0.5 * ((-a1 - 3f64.ln()) - (-a0));
            assert_relative_eq!(log_ratio(&m, &xv).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn boundary_goes_to_class_one() {
        let mut m = model(ScoreMode::Nonparametric, scalar(0.0, 1.0), 0.0, scalar(2.0, 1.0), 0.0);
        let x = DVector::from_vec(vec![0.0]);
        m.log_threshold = log_ratio(&m, &x).unwrap();
        assert_eq!(predict(&m, &x).unwrap(), 1);
    }

    #[test]
    fn dimension_mismatch() {
        let m = model(ScoreMode::Nonparametric, scalar(0.0, 1.0), 0.0, scalar(2.0, 1.0), 0.0);
        assert!(matches!(predict(&m, &DVector::zeros(2)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn ccr_fixtures() {
        let m = model(ScoreMode::Nonparametric, scalar(0.0, 1.0), 0.0, scalar(4.0, 1.0), 0.0);
        let rows = vec![vec![0.0], vec![4.0]];
        assert_eq!(ccr(&m, &Dataset::from_rows(&rows, vec![0, 1]).unwrap()).unwrap(), 1.0);
        assert_eq!(ccr(&m, &Dataset::from_rows(&rows, vec![1, 0]).unwrap()).unwrap(), 0.0);
        assert_eq!(ccr(&m, &Dataset::from_rows(&rows, vec![0, 0]).unwrap()).unwrap(), 0.5);
    }

    #[test]
    fn policy_round_trip() {
        for p in [
            RadiusPolicy::Clt { alpha: 0.5 },
            RadiusPolicy::Fixed { rho0: 0.0, rho1: 0.25 },
            RadiusPolicy::CrossValidation { grid: vec![0.001, 0.1], folds: 5 },
        ] {
            assert_eq!(p.to_string().parse::<RadiusPolicy>().unwrap(), p);
        }
        assert!("cv:1:0.1".parse::<RadiusPolicy>().is_err());
        assert!("fixed:-1,0".parse::<RadiusPolicy>().is_err());
        assert!("cv:5:".parse::<RadiusPolicy>().is_err());
    }

    #[test]
    fn default_grid() {
        let g = default_radius_grid();
        assert_eq!(g.len(), 9);
        assert_relative_eq!(g[0], 1e-3, max_relative = 1e-12);
        assert_relative_eq!(g[8], 10.0, max_relative = 1e-12);
    }

    #[test]
    fn train_requires_both_classes() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let data = Dataset::from_rows(&rows, vec![0; 5]).unwrap();
        let config = TrainConfig::new(ScoreMode::Nonparametric, RadiusPolicy::Clt { alpha: 0.5 });
        assert_eq!(train(&data, &config).unwrap_err(), Error::ClassMissing(1));
    }
}
