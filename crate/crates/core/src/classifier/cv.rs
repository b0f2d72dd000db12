//! Stratified cross-validation and repeated holdout evaluation.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{ccr, train, BaselineKind, BaselineModel, Classifier, CovarianceEstimator, RadiusPolicy, TrainConfig};
use crate::calibration::rep_rng;
use crate::error::{Error, Result};
use crate::linalg::Dataset;

/// Result of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    /// Radius with the highest mean CCR; ties go to the smallest radius.
    pub best_radius: f64,
    pub best_ccr: f64,
    /// `(radius, mean CCR over folds)` for each distinct grid point, ascending.
    pub table: Vec<(f64, f64)>,
}

/// Assigns every row to one of `folds` folds, class by class, after a seeded
/// shuffle. Per fold, each class count differs by at most one from any other fold.
pub fn stratified_folds(data: &Dataset, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 folds, got {folds}")));
    }
    let mut out = vec![Vec::new(); folds];
    for class in [0u8, 1] {
        let mut idx = data.class_indices(class);
        if idx.is_empty() {
            return Err(Error::ClassMissing(class));
        }
        if idx.len() < folds {
            return Err(Error::InvalidInput(format!("class {class} has {} samples, fewer than {folds} folds", idx.len())));
        }
        idx.shuffle(&mut rep_rng(seed, u64::from(class)));
        for (k, i) in idx.into_iter().enumerate() {
            out[k % folds].push(i);
        }
    }
    for fold in &mut out {
        fold.sort_unstable();
    }
    Ok(out)
}

fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut held = vec![false; n];
    for &i in fold {
        held[i] = true;
    }
    (0..n).filter(|&i| !held[i]).collect()
}

fn dedup_grid(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("radius grid is empty".into()));
    }
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

/// Grid search with an arbitrary fitting routine `fit(train_set, radius)`.
pub fn cross_validate_with<C, F>(data: &Dataset, grid: &[f64], folds: usize, seed: u64, fit: F) -> Result<CvOutcome>
where
    C: Classifier,
    F: Fn(&Dataset, f64) -> Result<C> + Sync,
{
    let grid = dedup_grid(grid)?;
    let parts = stratified_folds(data, folds, seed)?;
    let splits: Vec<(Dataset, Dataset)> = parts
        .iter()
        .map(|fold| Ok((data.subset(&complement(data.len(), fold))?, data.subset(fold)?)))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..folds).map(move |k| (g, k))).collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(g, k)| {
            let (train_set, test_set) = &splits[k];
            ccr(&fit(train_set, grid[g])?, test_set)
        })
        .collect::<Result<_>>()?;

    let table: Vec<(f64, f64)> = grid
        .iter()
        .enumerate()
        .map(|(g, &rho)| (rho, scores[g * folds..(g + 1) * folds].iter().sum::<f64>() / folds as f64))
        .collect();
    let (best_radius, best_ccr) = table
        .iter()
        .copied()
        .fold(None, |best: Option<(f64, f64)>, (rho, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((rho, c)),
        })
        .expect("grid nonempty");
    Ok(CvOutcome { best_radius, best_ccr, table })
}

/// Shared-radius (`ρ₀ = ρ₁`) grid search for the optimistic classifier.
/// The rest of `config` (mode, estimator, threshold tuning) is used per fold.
pub fn cross_validate(data: &Dataset, config: &TrainConfig, grid: &[f64], folds: usize, seed: u64) -> Result<CvOutcome> {
    cross_validate_with(data, grid, folds, seed, |train_set, rho| {
        let fold_config = TrainConfig { policy: RadiusPolicy::Fixed { rho0: rho, rho1: rho }, ..config.clone() };
        train(train_set, &fold_config)
    })
}

/// What to evaluate in [`holdout_trials`].
#[derive(Debug, Clone, PartialEq)]
pub enum HoldoutMethod {
    Optimistic(TrainConfig),
    Baseline { kind: BaselineKind, estimator: CovarianceEstimator, tune_threshold: bool },
    /// RQDA with its ridge chosen by CV on the training part.
    Rqda { grid: Vec<f64>, folds: usize, estimator: CovarianceEstimator, tune_threshold: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutReport {
    pub ccr: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
}

/// Stratified split with `round(train_fraction · n_c)` rows of each class for training.
pub fn stratified_split(data: &Dataset, train_fraction: f64, seed: u64, trial: u64) -> Result<(Dataset, Dataset)> {
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in [0u8, 1] {
        let mut idx = data.class_indices(class);
        if idx.is_empty() {
            return Err(Error::ClassMissing(class));
        }
        idx.shuffle(&mut rep_rng(seed, 2 * trial + u64::from(class)));
        let cut = ((train_fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        train_idx.extend_from_slice(&idx[..cut]);
        test_idx.extend_from_slice(&idx[cut..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((data.subset(&train_idx)?, data.subset(&test_idx)?))
}

/// Repeated 75/25 stratified holdout. Trials run in parallel; results do not
/// depend on the thread count.
pub fn holdout_trials(data: &Dataset, method: &HoldoutMethod, trials: usize, seed: u64) -> Result<HoldoutReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("need at least one trial".into()));
    }
    let ccrs: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let (train_set, test_set) = stratified_split(data, 0.75, seed, t)?;
            let trial_seed = seed.wrapping_add(t);
            match method {
                HoldoutMethod::Optimistic(config) => {
                    let config = TrainConfig { seed: trial_seed, ..config.clone() };
                    ccr(&train(&train_set, &config)?, &test_set)
                }
                HoldoutMethod::Baseline { kind, estimator, tune_threshold } => {
                    ccr(&BaselineModel::fit(*kind, &train_set, *estimator, false, *tune_threshold)?, &test_set)
                }
                HoldoutMethod::Rqda { grid, folds, estimator, tune_threshold } => {
                    let outcome = cross_validate_with(&train_set, grid, *folds, trial_seed, |fold_set, rho| {
                        BaselineModel::fit(BaselineKind::Rqda(rho), fold_set, *estimator, false, *tune_threshold)
                    })?;
                    let model = BaselineModel::fit(
                        BaselineKind::Rqda(outcome.best_radius),
                        &train_set,
                        *estimator,
                        false,
                        *tune_threshold,
                    )?;
                    ccr(&model, &test_set)
                }
            }
        })
        .collect::<Result<_>>()?;
    let n = ccrs.len() as f64;
    let mean = ccrs.iter().sum::<f64>() / n;
    let std_dev = if ccrs.len() > 1 {
        (ccrs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(HoldoutReport { ccr: ccrs, mean, std_dev })
}
