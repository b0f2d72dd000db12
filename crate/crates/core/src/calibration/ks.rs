//! Kolmogorov–Smirnov distances.

use crate::error::{Error, Result};

/// What an empirical sample is compared against.
pub enum Reference<'a> {
    Cdf(&'a dyn Fn(f64) -> f64),
    Samples(&'a [f64]),
}

pub fn ks_distance(empirical: &[f64], reference: Reference<'_>) -> Result<f64> {
    match reference {
        Reference::Cdf(cdf) => ks_distance_cdf(empirical, cdf),
        Reference::Samples(other) => ks_distance_two_sample(empirical, other),
    }
}

fn sorted(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup |Fₙ(x) − F(x)|` against a continuous reference CDF.
pub fn ks_distance_cdf(empirical: &[f64], cdf: &dyn Fn(f64) -> f64) -> Result<f64> {
    let v = sorted(empirical)?;
    let n = v.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        worst = worst.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(worst.clamp(0.0, 1.0))
}

/// `sup |Fₙ(x) − Gₘ(x)|` between two empirical CDFs.
pub fn ks_distance_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a)?;
    let b = sorted(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut worst: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(worst)
}
