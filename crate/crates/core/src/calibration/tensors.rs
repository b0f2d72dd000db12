//! Third and fourth moment tensors of an isotropic random vector.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `E[ηᵢηⱼηₖ]` and `E[ηᵢηⱼηₖηₗ]` for an isotropic `η` (zero mean, identity covariance).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTensors {
    dim: usize,
    third: Vec<f64>,
    fourth: Vec<f64>,
}

impl MomentTensors {
    /// Standard normal coordinates: third moments vanish, fourth by Isserlis.
    pub fn gaussian(dim: usize) -> Self {
        Self::independent(dim, 0.0, 3.0)
    }

    /// Independent coordinates sharing a skewness `E[ηᵢ³]` and kurtosis `E[ηᵢ⁴]`.
    pub fn independent(dim: usize, skewness: f64, kurtosis: f64) -> Self {
        let mut t = Self { dim, third: vec![0.0; dim.pow(3)], fourth: vec![0.0; dim.pow(4)] };
        for i in 0..dim {
            let idx = t.idx3(i, i, i);
            t.third[idx] = skewness;
        }
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        let v = if i == j && j == k && k == l {
                            kurtosis
                        } else {
                            pairing(i, j, k, l)
                        };
                        let idx = t.idx4(i, j, k, l);
                        t.fourth[idx] = v;
                    }
                }
            }
        }
        t
    }

    /// Coordinates `ζᵢ ~ (χ²(1) − 1)/√2`, independent.
    pub fn normalized_chi2(dim: usize) -> Self {
        // central moments of χ²(1): μ₃ = 8, μ₄ = 60; variance 2
        Self::independent(dim, 8.0 / 2f64.powf(1.5), 60.0 / 4.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx3(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dim + j) * self.dim + k
    }

    fn idx4(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + l
    }

    pub fn third(&self, i: usize, j: usize, k: usize) -> f64 {
        self.third[self.idx3(i, j, k)]
    }

    pub fn fourth(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.fourth[self.idx4(i, j, k, l)]
    }
}

/// Isserlis pairing count for distinct-index patterns `E[ηᵢηⱼηₖηₗ]` of independent unit-variance coordinates.
fn pairing(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    d(i, j) * d(k, l) + d(i, k) * d(j, l) + d(i, l) * d(j, k)
}

/// Empirical plug-in tensors from isotropic samples (`n × d`).
///
/// Entries are accumulated once per sorted index tuple and copied to every
/// permutation, so the result is exactly symmetric.
pub fn estimate_moment_tensors(samples: &DMatrix<f64>) -> Result<MomentTensors> {
    let n = samples.nrows();
    let d = samples.ncols();
    if d == 0 || n < d + 1 {
        return Err(Error::DegenerateSample(format!("need at least d + 1 = {} samples, got {n}", d + 1)));
    }
    let mut t = MomentTensors { dim: d, third: vec![0.0; d.pow(3)], fourth: vec![0.0; d.pow(4)] };
    let inv_n = 1.0 / n as f64;
    for i in 0..d {
        for j in i..d {
            for k in j..d {
                let mut s3 = 0.0;
                for row in 0..n {
                    s3 += samples[(row, i)] * samples[(row, j)] * samples[(row, k)];
                }
                let v = s3 * inv_n;
                for (a, b, c) in permutations3(i, j, k) {
                    let idx = t.idx3(a, b, c);
                    t.third[idx] = v;
                }
                for l in k..d {
                    let mut s4 = 0.0;
                    for row in 0..n {
                        s4 += samples[(row, i)] * samples[(row, j)] * samples[(row, k)] * samples[(row, l)];
                    }
                    let v = s4 * inv_n;
                    for (a, b, c, e) in permutations4(i, j, k, l) {
                        let idx = t.idx4(a, b, c, e);
                        t.fourth[idx] = v;
                    }
                }
            }
        }
    }
    Ok(t)
}

fn permutations3(i: usize, j: usize, k: usize) -> [(usize, usize, usize); 6] {
    [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)]
}

fn permutations4(i: usize, j: usize, k: usize, l: usize) -> Vec<(usize, usize, usize, usize)> {
    let v = [i, j, k, l];
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for e in 0..4 {
                    if a != b && a != c && a != e && b != c && b != e && c != e {
                        out.push((v[a], v[b], v[c], v[e]));
                    }
                }
            }
        }
    }
    out
}
