//! Plain-text model files.
//!
//! One `key = value` pair per line. Vectors and row-major matrices are
//! space-separated; floats are written with 17 significant digits so a
//! save/load cycle is exact.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use optiscore::{AmbiguitySpec, ClassifierModel, CovarianceEstimator, MomentPair, ScoreMode};

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn floats<'a>(vs: impl IntoIterator<Item = &'a f64>) -> String {
    vs.into_iter().map(|&v| float(v)).collect::<Vec<_>>().join(" ")
}

fn row_major(m: &DMatrix<f64>) -> String {
    floats(m.transpose().iter())
}

pub fn to_string(model: &ClassifierModel) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("write to string");
    put("format_version", FORMAT_VERSION.to_string());
    put("mode", model.mode.as_str().into());
    put("d", model.dimension().to_string());
    for (c, spec) in [("0", &model.spec0), ("1", &model.spec1)] {
        put(&format!("mu{c}"), floats(spec.nominal().mean().iter()));
        put(&format!("cov{c}"), row_major(spec.nominal().cov()));
        put(&format!("rho{c}"), float(spec.radius()));
    }
    put("log_threshold", float(model.log_threshold));
    put("estimator", model.estimator.as_str().into());
    put("radius_policy", model.radius_policy.clone());
    put("seed", model.seed.to_string());
    out
}

pub fn from_str(text: &str) -> CliResult<ClassifierModel> {
    let bad = |m: String| CliError::ModelFile(m);
    let mut fields = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("line {}: expected 'key = value'", n + 1)))?;
        fields.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    let get = |k: &str| fields.get(k).map(String::as_str).ok_or_else(|| bad(format!("missing key '{k}'")));
    let parse_floats = |k: &str, len: usize| -> CliResult<Vec<f64>> {
        let vs: Vec<f64> = get(k)?
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| bad(format!("{k}: '{t}' is not a number"))))
            .collect::<CliResult<_>>()?;
        if vs.len() != len {
            return Err(bad(format!("{k}: expected {len} values, found {}", vs.len())));
        }
        Ok(vs)
    };

    let version: u32 = get("format_version")?.parse().map_err(|_| bad("bad format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format_version {version}")));
    }
    let mode: ScoreMode = get("mode")?.parse()?;
    let d: usize = get("d")?.parse().map_err(|_| bad("bad d".into()))?;
    if d == 0 {
        return Err(bad("d must be positive".into()));
    }
    let spec = |c: &str| -> CliResult<AmbiguitySpec> {
        let mean = DVector::from_vec(parse_floats(&format!("mu{c}"), d)?);
        let cov = DMatrix::from_row_slice(d, d, &parse_floats(&format!("cov{c}"), d * d)?);
        let rho = parse_floats(&format!("rho{c}"), 1)?[0];
        Ok(AmbiguitySpec::new(MomentPair::new(mean, cov)?, rho)?)
    };
    let log_threshold = parse_floats("log_threshold", 1)?[0];
    let mut model = ClassifierModel::from_parts(mode, spec("0")?, spec("1")?, log_threshold)?;
    model.estimator = get("estimator")?.parse::<CovarianceEstimator>()?;
    model.radius_policy = get("radius_policy")?.to_owned();
    model.seed = get("seed")?.parse().map_err(|_| bad("bad seed".into()))?;
    Ok(model)
}

pub fn save(model: &ClassifierModel, path: &Path) -> CliResult<()> {
    std::fs::write(path, to_string(model)).map_err(|e| CliError::io(path, e))
}

pub fn load(path: &Path) -> CliResult<ClassifierModel> {
    from_str(&std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?)
}
