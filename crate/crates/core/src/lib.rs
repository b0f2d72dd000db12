//! Robust Bayesian binary classification with optimistic score ratios.
//!
//! Each class is described by a nominal mean and covariance together with a
//! radius. The ambiguity set around a class collects every distribution whose
//! first two moments lie within that radius of the nominal pair, measured by
//! the moment divergence in [`divergence`]. An observation is scored by the
//! most favourable distribution in each set ([`solver`]), and the ratio of the
//! two scores is compared against a tuned threshold ([`classifier`]).
//!
//! Radii can be calibrated from the asymptotic law of the divergence between
//! empirical and true moments ([`calibration`]).

pub mod calibration;
pub mod classifier;
pub mod divergence;
pub mod error;
pub mod linalg;
pub mod solver;

pub use classifier::{
    baseline_predict, ccr, cross_validate, holdout_trials, log_ratio, predict, train, tune_threshold,
    BaselineKind, BaselineModel, Classifier, ClassifierModel, CovarianceEstimator, CvOutcome, HoldoutMethod,
    RadiusPolicy, TrainConfig,
};
pub use divergence::{divergence, in_uncertainty_set, kl_gaussian, AmbiguitySpec};
pub use error::{Error, Result};
pub use linalg::{cholesky, ledoit_wolf, log_det, quad_form, sample_moments, CholeskyFactor, Dataset, MomentPair};
pub use solver::{
    minimize_phi, optimistic_gaussian_loglik, optimistic_nonparam_score, phi1, phi2, project_mean, GammaStar,
    ScoreMode, SolverResult,
};
