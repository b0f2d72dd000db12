//! Classical discriminant rules used as baselines.

use nalgebra::{DMatrix, DVector};

use super::{estimate_moments, tune_threshold, Classifier, CovarianceEstimator};
use crate::error::{Error, Result};
use crate::linalg::{check_dim, Dataset, MomentPair};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineKind {
    /// Class-specific Mahalanobis distance.
    Mdc,
    /// Mahalanobis distance under the count-weighted pooled covariance.
    Lda,
    /// Gaussian log-likelihood with per-class covariances.
    Qda,
    /// QDA on `Σ̂_c + ρ I`.
    Rqda(f64),
}

/// Discriminant of a baseline rule; label 1 iff it is `≥` the threshold (0 by default).
///
/// MDC and LDA use `½(q₀ − q₁)`; QDA and RQDA use `½[(q₀ + log det Σ₀) − (q₁ + log det Σ₁)]`,
/// with `q_c = (x − μ_c)ᵀ Σ_c⁻¹ (x − μ_c)`. For LDA the caller passes moments that
/// already share the pooled covariance.
pub fn baseline_discriminant(kind: BaselineKind, moments: [&MomentPair; 2], x: &DVector<f64>) -> Result<f64> {
    let [m0, m1] = moments;
    check_dim(m0.dim(), m1.dim())?;
    match kind {
        BaselineKind::Mdc | BaselineKind::Lda => Ok(0.5 * (m0.mahalanobis(x)? - m1.mahalanobis(x)?)),
        BaselineKind::Qda => {
            Ok(0.5 * ((m0.mahalanobis(x)? + m0.log_det()) - (m1.mahalanobis(x)? + m1.log_det())))
        }
        BaselineKind::Rqda(rho) => {
            let r0 = ridge(m0, rho)?;
            let r1 = ridge(m1, rho)?;
            baseline_discriminant(BaselineKind::Qda, [&r0, &r1], x)
        }
    }
}

/// Baseline label with ties going to class 1.
pub fn baseline_predict(kind: BaselineKind, moments: [&MomentPair; 2], x: &DVector<f64>) -> Result<u8> {
    Ok(u8::from(baseline_discriminant(kind, moments, x)? >= 0.0))
}

/// `Σ + ρ I` with the same mean.
pub fn ridge(m: &MomentPair, rho: f64) -> Result<MomentPair> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::DomainError(format!("ridge must be nonnegative, got {rho}")));
    }
    let d = m.dim();
    MomentPair::new(m.mean().clone(), m.cov() + DMatrix::identity(d, d) * rho)
}

/// `(n₀Σ₀ + n₁Σ₁)/(n₀ + n₁)`.
pub fn pooled_covariance(m0: &MomentPair, n0: usize, m1: &MomentPair, n1: usize) -> DMatrix<f64> {
    (m0.cov() * n0 as f64 + m1.cov() * n1 as f64) / (n0 + n1) as f64
}

/// A fitted baseline rule.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub kind: BaselineKind,
    /// Per-class moments as used by the rule (pooled for LDA, ridged for RQDA).
    pub moments: [MomentPair; 2],
    pub log_threshold: f64,
}

impl BaselineModel {
    /// Fits class moments; optionally tunes the threshold on the training data.
    pub fn fit(
        kind: BaselineKind,
        data: &Dataset,
        estimator: CovarianceEstimator,
        jitter: bool,
        tune: bool,
    ) -> Result<Self> {
        let d = data.dim();
        let mut raw = Vec::with_capacity(2);
        for class in [0u8, 1] {
            let n = data.class_count(class);
            if n == 0 {
                return Err(Error::ClassMissing(class));
            }
            if n < d + 1 {
                return Err(Error::DegenerateSample(format!("class {class} has {n} samples, need at least {}", d + 1)));
            }
            raw.push((estimate_moments(&data.class_features(class), estimator, jitter)?, n));
        }
        let (m1, n1) = raw.pop().expect("two classes");
        let (m0, n0) = raw.pop().expect("two classes");
        let moments = match kind {
            BaselineKind::Lda => {
                let pooled = pooled_covariance(&m0, n0, &m1, n1);
                [
                    MomentPair::new_symmetrized(m0.mean().clone(), pooled.clone())?,
                    MomentPair::new_symmetrized(m1.mean().clone(), pooled)?,
                ]
            }
            BaselineKind::Rqda(rho) => [ridge(&m0, rho)?, ridge(&m1, rho)?],
            BaselineKind::Mdc | BaselineKind::Qda => [m0, m1],
        };
        let mut model = Self { kind, moments, log_threshold: 0.0 };
        if tune {
            let (r0, r1) = split_decisions(&model, data)?;
            model.log_threshold = tune_threshold(&r0, &r1)?;
        }
        Ok(model)
    }

    fn effective_kind(&self) -> BaselineKind {
        // ridge already folded into the stored moments
        match self.kind {
            BaselineKind::Rqda(_) => BaselineKind::Qda,
            k => k,
        }
    }
}

impl Classifier for BaselineModel {
    fn dim(&self) -> usize {
        self.moments[0].dim()
    }

    fn decision(&self, x: &DVector<f64>) -> Result<f64> {
        baseline_discriminant(self.effective_kind(), [&self.moments[0], &self.moments[1]], x)
    }

    fn threshold(&self) -> f64 {
        self.log_threshold
    }
}

/// Decision values of the training rows, split by label.
pub(crate) fn split_decisions<C: Classifier + ?Sized>(model: &C, data: &Dataset) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r0 = Vec::with_capacity(data.class_count(0));
    let mut r1 = Vec::with_capacity(data.class_count(1));
    for i in 0..data.len() {
        let v = model.decision(&data.row(i))?;
        if data.labels()[i] == 0 {
            r0.push(v);
        } else {
            r1.push(v);
        }
    }
    Ok((r0, r1))
}
