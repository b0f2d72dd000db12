//! Dense symmetric linear algebra and moment estimation.
//!
//! Everything here works on small dense matrices (d up to a few hundred).
//! Covariances are estimated with the 1/n normalization throughout.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest tolerated absolute mismatch between `M[i][j]` and `M[j][i]`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Relative pivot floor used by [`cholesky`].
pub const PIVOT_TOL: f64 = 1e-13;

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    lower: DMatrix<f64>,
}

impl CholeskyFactor {
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.lower * self.lower.transpose()
    }

    /// Solves `L y = b` by forward substitution.
    pub fn solve_lower(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut y = b.clone();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc -= self.lower[(i, k)] * y[k];
            }
            y[i] = acc / self.lower[(i, i)];
        }
        y
    }

    /// Solves `Lᵀ z = y` by back substitution.
    pub fn solve_upper(&self, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut z = y.clone();
        for i in (0..n).rev() {
            let mut acc = z[i];
            for k in (i + 1)..n {
                acc -= self.lower[(k, i)] * z[k];
            }
            z[i] = acc / self.lower[(i, i)];
        }
        z
    }

    /// Solves `M z = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// Explicit `M⁻¹`, column by column.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut inv = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            inv.set_column(j, &self.solve(&e));
        }
        symmetrize(&inv)
    }

    pub fn log_det(&self) -> f64 {
        log_det(self)
    }

    pub fn quad_form(&self, w: &DVector<f64>) -> f64 {
        quad_form(self, w)
    }
}

/// Cholesky factorization of a symmetric matrix. Only the lower triangle is read.
///
/// Fails with [`Error::NotPositiveDefinite`] when a pivot drops to
/// `1e-13 · max diagonal entry` or below.
pub fn cholesky(m: &DMatrix<f64>) -> Result<CholeskyFactor> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.ncols() });
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let max_diag = (0..n).map(|i| m[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
    let floor = PIVOT_TOL * max_diag.max(0.0);
    let mut lower = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= lower[(j, k)] * lower[(j, k)];
        }
        if !pivot.is_finite() || pivot <= floor {
            return Err(Error::NotPositiveDefinite { row: j, pivot });
        }
        let diag = pivot.sqrt();
        lower[(j, j)] = diag;
        for i in (j + 1)..n {
            let mut acc = m[(i, j)];
            for k in 0..j {
                acc -= lower[(i, k)] * lower[(j, k)];
            }
            lower[(i, j)] = acc / diag;
        }
    }
    Ok(CholeskyFactor { lower })
}

/// `log det M = 2 Σ log Lᵢᵢ`.
pub fn log_det(factor: &CholeskyFactor) -> f64 {
    2.0 * factor.lower.diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// `wᵀ M⁻¹ w` through one triangular solve (`‖L⁻¹ w‖²`).
pub fn quad_form(factor: &CholeskyFactor, w: &DVector<f64>) -> f64 {
    factor.solve_lower(w).norm_squared()
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// A mean vector together with a symmetric positive-definite covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPair {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    factor: CholeskyFactor,
}

impl MomentPair {
    /// Validates symmetry (absolute tolerance 1e-10) and positive definiteness.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: cov.nrows() });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite moment entry".into()));
        }
        for i in 0..d {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidInput(format!(
                        "covariance not symmetric at ({i}, {j}): {} vs {}",
                        cov[(i, j)],
                        cov[(j, i)]
                    )));
                }
            }
        }
        let factor = cholesky(&cov)?;
        Ok(Self { mean, cov, factor })
    }

    /// Like [`MomentPair::new`] but first replaces `cov` by its symmetric part.
    pub fn new_symmetrized(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let cov = if cov.is_square() { symmetrize(&cov) } else { cov };
        Self::new(mean, cov)
    }

    /// Mean and covariance from plain slices; `cov` is row-major.
    pub fn from_slices(mean: &[f64], cov_row_major: &[f64]) -> Result<Self> {
        let d = mean.len();
        if cov_row_major.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, found: cov_row_major.len() });
        }
        Self::new(DVector::from_column_slice(mean), DMatrix::from_row_slice(d, d, cov_row_major))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn log_det(&self) -> f64 {
        log_det(&self.factor)
    }

    /// `(x − μ)ᵀ Σ⁻¹ (x − μ)`.
    pub fn mahalanobis(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(quad_form(&self.factor, &(x - &self.mean)))
    }

    /// Moments of `A ξ + b` when `ξ` has these moments.
    pub fn affine_image(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Self> {
        check_dim(self.dim(), a.ncols())?;
        check_dim(a.nrows(), b.len())?;
        Self::new_symmetrized(a * &self.mean + b, a * &self.cov * a.transpose())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `n × d` features with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<u8>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        check_dim(features.nrows(), labels.len())?;
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidInput(format!("label {bad} is not 0 or 1")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature entry".into()));
        }
        Ok(Self { features, labels })
    }

    /// Builds a dataset from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let d = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: r.len() });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(n, d, &flat), labels)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.features.row(i).transpose()
    }

    pub fn class_count(&self, class: u8) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }

    /// Row indices whose label equals `class`, in order.
    pub fn class_indices(&self, class: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == class).collect()
    }

    /// Feature rows of one class.
    pub fn class_features(&self, class: u8) -> DMatrix<f64> {
        self.features.select_rows(self.class_indices(class).iter())
    }

    /// A new dataset made of the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(self.features.select_rows(indices.iter()), labels)
    }
}

/// Mean and 1/n covariance without any definiteness check.
pub fn raw_moments(data: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = data.nrows();
    let d = data.ncols();
    let mut mean = DVector::zeros(d);
    for row in data.row_iter() {
        mean += row.transpose();
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for row in data.row_iter() {
        let c = row.transpose() - &mean;
        cov.ger(1.0, &c, &c, 1.0);
    }
    cov /= n as f64;
    (mean, symmetrize(&cov))
}

/// Sample mean and covariance with the 1/n normalization.
pub fn sample_moments(data: &DMatrix<f64>) -> Result<MomentPair> {
    if data.nrows() < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 rows, got {}", data.nrows())));
    }
    let (mean, cov) = raw_moments(data);
    MomentPair::new(mean, cov).map_err(|e| match e {
        Error::NotPositiveDefinite { row, pivot } => Error::DegenerateSample(format!(
            "sample covariance is not positive definite (pivot {pivot:.3e} at row {row})"
        )),
        other => other,
    })
}

/// Ledoit–Wolf shrinkage of the 1/n sample covariance towards `m·I`.
///
/// With `S` the sample covariance, `m = Tr(S)/d`, `δ² = ‖S − mI‖²_F/d` and
/// `b̄² = n⁻² Σₜ ‖cₜcₜᵀ − S‖²_F/d` over centred rows `cₜ`, the result is
/// `(b²/δ²)·m·I + (1 − b²/δ²)·S` with `b² = min(b̄², δ²)`.
pub fn ledoit_wolf(data: &DMatrix<f64>) -> Result<MomentPair> {
    let (mean, shrunk) = ledoit_wolf_raw(data)?;
    MomentPair::new(mean, shrunk).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => {
            Error::DegenerateSample("shrunk covariance is not positive definite".into())
        }
        other => other,
    })
}

/// Mean and shrunk covariance before the definiteness check.
pub fn ledoit_wolf_raw(data: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = data.nrows();
    if n < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 rows, got {n}")));
    }
    let (mean, s) = raw_moments(data);
    let shrunk = ledoit_wolf_shrink(data, &mean, &s)?;
    Ok((mean, shrunk))
}

fn ledoit_wolf_shrink(data: &DMatrix<f64>, mean: &DVector<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = data.nrows() as f64;
    let d = data.ncols();
    let mu = s.trace() / d as f64;
    if mu <= 0.0 {
        return Err(Error::DegenerateSample("all rows are identical".into()));
    }
    let target = DMatrix::<f64>::identity(d, d) * mu;
    let delta2 = (s - &target).norm_squared() / d as f64;
    if delta2 == 0.0 {
        return Ok(target);
    }
    let mut bbar2 = 0.0;
    for row in data.row_iter() {
        let c = row.transpose() - mean;
        let outer = &c * c.transpose();
        bbar2 += (outer - s).norm_squared() / d as f64;
    }
    bbar2 /= n * n;
    let shrinkage = bbar2.min(delta2) / delta2;
    Ok(symmetrize(&(target * shrinkage + s * (1.0 - shrinkage))))
}

/// Adds `1e-8 · Tr(S)/d · I` to a covariance matrix.
pub fn jitter_covariance(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let d = cov.nrows();
    let eps = 1e-8 * cov.trace() / d as f64;
    cov + DMatrix::<f64>::identity(d, d) * eps
}
