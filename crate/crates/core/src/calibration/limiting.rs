//! Monte-Carlo sampler for the limiting law `HᵀH + ½ Tr(Z²)` of `n · D`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{rep_rng, MomentTensors};
use crate::error::{Error, Result};
use crate::linalg::cholesky;

/// Eigenvalues below this signal inconsistent tensors.
pub const PSD_TOL: f64 = 1e-6;
/// Diagonal jitter tried when the joint covariance is only semidefinite.
pub const PSD_JITTER: f64 = 1e-10;

/// Joint covariance of `(H, upper triangle of Z)`, `H` first, `Z` row by row.
pub fn joint_covariance(tensors: &MomentTensors) -> DMatrix<f64> {
    let d = tensors.dim();
    let pairs = upper_pairs(d);
    let m = d + pairs.len();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut cov = DMatrix::zeros(m, m);
    for i in 0..d {
        cov[(i, i)] = 1.0;
        for (p, &(j, k)) in pairs.iter().enumerate() {
            let v = tensors.third(i, j, k);
            cov[(i, d + p)] = v;
            cov[(d + p, i)] = v;
        }
    }
    for (p, &(j, k)) in pairs.iter().enumerate() {
        for (q, &(jj, kk)) in pairs.iter().enumerate() {
            cov[(d + p, d + q)] = tensors.fourth(j, k, jj, kk) - delta(j, k) * delta(jj, kk);
        }
    }
    cov
}

pub(crate) fn upper_pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|j| (j..d).map(move |k| (j, k))).collect()
}

/// A square root `B` of a PSD matrix with `B Bᵀ = C`.
fn psd_root(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eigen = SymmetricEigen::new(cov.clone());
    let min_eigenvalue = eigen.eigenvalues.min();
    if min_eigenvalue < -PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    if let Ok(f) = cholesky(cov) {
        return Ok(f.lower().clone());
    }
    let m = cov.nrows();
    if let Ok(f) = cholesky(&(cov + DMatrix::identity(m, m) * PSD_JITTER)) {
        return Ok(f.lower().clone());
    }
    let roots = eigen.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eigen.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Draws `reps` independent values of `HᵀH + ½ Tr(Z²)`.
///
/// Draw `r` uses its own ChaCha8 stream (`seed`, stream `r`), so the output
/// does not depend on how draws are scheduled across threads.
pub fn sample_limiting_law(tensors: &MomentTensors, reps: usize, seed: u64) -> Result<Vec<f64>> {
    let d = tensors.dim();
    let pairs = upper_pairs(d);
    let root = psd_root(&joint_covariance(tensors))?;
    let m = root.nrows();
    let values = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(seed, rep as u64);
            let z = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
            let y = &root * z;
            let h2: f64 = y.rows(0, d).norm_squared();
            let trace_z2: f64 = pairs
                .iter()
                .enumerate()
                .map(|(p, &(j, k))| {
                    let v = y[d + p] * y[d + p];
                    if j == k {
                        v
                    } else {
                        2.0 * v
                    }
                })
                .sum();
            h2 + 0.5 * trace_z2
        })
        .collect();
    Ok(values)
}
