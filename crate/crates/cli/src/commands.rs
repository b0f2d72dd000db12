//! Subcommand definitions and their implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use optiscore::calibration::{
    ks_distance_two_sample, sample_limiting_law, simulate_divergence_distribution, Generator, MomentTensors,
    RNG_FAMILY,
};
use optiscore::classifier::{default_radius_grid, DEFAULT_FOLDS};
use optiscore::{
    ccr, holdout_trials, log_ratio, train, BaselineKind, ClassifierModel, CovarianceEstimator, HoldoutMethod,
    RadiusPolicy, ScoreMode, TrainConfig,
};

use crate::data::{load_csv, load_dataset};
use crate::error::{CliError, CliResult};
use crate::model_file;

#[derive(Debug, Parser)]
#[command(name = "optiscore", version, about = "Optimistic score ratio classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a classifier and write a model file.
    Train(TrainArgs),
    /// Write per-row log-ratios and labels.
    Predict(PredictArgs),
    /// Print the correct classification rate on labelled data.
    Evaluate(EvaluateArgs),
    /// Repeated 75/25 holdout with cross-validated radii.
    Crossval(CrossvalArgs),
    /// Simulate n·D and the limiting law it converges to.
    SimulateClt(SimulateArgs),
    /// Evaluate a 2-d model on a regular grid.
    Boundary(BoundaryArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// gaussian or nonparam
    #[arg(long)]
    pub mode: String,
    /// clt, cv, or fixed:R0,R1
    #[arg(long, default_value = "clt")]
    pub radius: String,
    /// Level of the chi-square quantile for --radius clt.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Comma-separated radii for --radius cv (default: 9 log-spaced values in [1e-3, 10]).
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    /// sample or ledoit-wolf
    #[arg(long, default_value = "ledoit-wolf")]
    pub estimator: String,
    /// Add 1e-8·Tr(S)/d to the covariance diagonal before factorizing.
    #[arg(long)]
    pub jitter: bool,
    /// Keep log τ = 0 instead of tuning it on the training data.
    #[arg(long)]
    pub no_tune: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// gaussian or nonparam; ignored with --baseline
    #[arg(long, default_value = "gaussian")]
    pub mode: String,
    /// Comma-separated radii (default: 9 log-spaced values in [1e-3, 10]).
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Evaluate mdc, lda, qda or rqda instead (rqda picks its ridge from --grid by CV).
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long, default_value = "ledoit-wolf")]
    pub estimator: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// gaussian or chi2
    #[arg(long, default_value = "gaussian")]
    pub generator: String,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub reps: usize,
    /// Draws from the limiting law.
    #[arg(long, default_value_t = 100_000)]
    pub limit_reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub xmin: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub xmax: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub ymin: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub ymax: f64,
    #[arg(long, default_value_t = 200)]
    pub grid: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn parse_mode(s: &str) -> CliResult<ScoreMode> {
    s.parse().map_err(usage)
}

fn parse_estimator(s: &str) -> CliResult<CovarianceEstimator> {
    s.parse().map_err(usage)
}

fn parse_grid(grid: Option<&str>) -> CliResult<Vec<f64>> {
    match grid {
        None => Ok(default_radius_grid()),
        Some(s) => {
            let g = s
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad grid value '{t}'"))))
                .collect::<CliResult<Vec<f64>>>()?;
            if g.is_empty() || g.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                return Err(usage("grid radii must be finite and nonnegative"));
            }
            Ok(g)
        }
    }
}

fn parse_policy(args: &TrainArgs) -> CliResult<RadiusPolicy> {
    let policy = match args.radius.as_str() {
        "clt" => RadiusPolicy::Clt { alpha: args.alpha },
        "cv" => RadiusPolicy::CrossValidation { grid: parse_grid(args.grid.as_deref())?, folds: args.folds },
        other => match other.strip_prefix("fixed:") {
            Some(_) => other.parse().map_err(usage)?,
            None => return Err(usage(format!("unknown radius policy '{other}'"))),
        },
    };
    policy.validate().map_err(usage)?;
    Ok(policy)
}

fn create(path: &Path) -> CliResult<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| CliError::io(path, e))?))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Train(a) => cmd_train(&a, out),
        Command::Predict(a) => cmd_predict(&a),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Crossval(a) => cmd_crossval(&a, out),
        Command::SimulateClt(a) => cmd_simulate(&a, out),
        Command::Boundary(a) => cmd_boundary(&a),
    }
}

fn say(out: &mut dyn Write, line: String) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    let config = TrainConfig {
        mode: parse_mode(&a.mode)?,
        policy: parse_policy(a)?,
        estimator: parse_estimator(&a.estimator)?,
        jitter: a.jitter,
        tune_threshold: !a.no_tune,
        seed: a.seed,
    };
    let data = load_dataset(&a.data)?;
    let model = train(&data, &config)?;
    let training_ccr = ccr(&model, &data)?;
    model_file::save(&model, &a.out)?;
    say(out, format!("rho0 {:.6e}", model.spec0.radius()))?;
    say(out, format!("rho1 {:.6e}", model.spec1.radius()))?;
    say(out, format!("log_tau {:.6e} (tau {:.6e})", model.log_threshold, model.log_threshold.exp()))?;
    say(out, format!("training CCR {:.2}", 100.0 * training_ccr))
}

fn cmd_predict(a: &PredictArgs) -> CliResult<()> {
    let model = model_file::load(&a.model)?;
    let data = load_csv(&a.data)?;
    check_features(&model, data.features.ncols())?;
    let mut w = create(&a.out)?;
    let io = |e: std::io::Error| CliError::io(&a.out, e);
    writeln!(w, "row,log_ratio,label").map_err(io)?;
    for (i, row) in data.features.row_iter().enumerate() {
        let r = log_ratio(&model, &row.transpose())?;
        writeln!(w, "{i},{r:.16e},{}", u8::from(r >= model.log_threshold)).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn check_features(model: &ClassifierModel, found: usize) -> CliResult<()> {
    if found != model.dimension() {
        return Err(optiscore::Error::DimensionMismatch { expected: model.dimension(), found }.into());
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = model_file::load(&a.model)?;
    let data = load_dataset(&a.data)?;
    check_features(&model, data.dim())?;
    say(out, format!("CCR {:.2}", 100.0 * ccr(&model, &data)?))
}

fn cmd_crossval(a: &CrossvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let grid = parse_grid(a.grid.as_deref())?;
    let estimator = parse_estimator(&a.estimator)?;
    if a.folds < 2 || a.trials == 0 {
        return Err(usage("need --folds >= 2 and --trials >= 1"));
    }
    let method = match a.baseline.as_deref() {
        None => {
            let policy = RadiusPolicy::CrossValidation { grid, folds: a.folds };
            HoldoutMethod::Optimistic(TrainConfig { estimator, ..TrainConfig::new(parse_mode(&a.mode)?, policy) })
        }
        Some("rqda") => HoldoutMethod::Rqda { grid, folds: a.folds, estimator, tune_threshold: true },
        Some(other) => {
            let kind = match other {
                "mdc" => BaselineKind::Mdc,
                "lda" => BaselineKind::Lda,
                "qda" => BaselineKind::Qda,
                _ => return Err(usage(format!("unknown baseline '{other}'"))),
            };
            HoldoutMethod::Baseline { kind, estimator, tune_threshold: true }
        }
    };
    let data = load_dataset(&a.data)?;
    let report = holdout_trials(&data, &method, a.trials, a.seed)?;
    for (t, c) in report.ccr.iter().enumerate() {
        say(out, format!("trial {t} CCR {:.2}", 100.0 * c))?;
    }
    say(out, format!("mean CCR {:.2} (sd {:.2})", 100.0 * report.mean, 100.0 * report.std_dev))
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let generator: Generator = a.generator.parse().map_err(usage)?;
    if a.reps == 0 || a.limit_reps == 0 {
        return Err(usage("--reps and --limit-reps must be positive"));
    }
    let sim = simulate_divergence_distribution(generator, a.d, a.n, a.reps, a.seed, None)?;
    let tensors = match generator {
        Generator::Gaussian => MomentTensors::gaussian(a.d),
        Generator::NormalizedChi2 => MomentTensors::normalized_chi2(a.d),
    };
    let limit = sample_limiting_law(&tensors, a.limit_reps, a.seed.wrapping_add(1))?;
    let ks = ks_distance_two_sample(&sim.values, &limit)?;

    let mut w = create(&a.out)?;
    let io = |e: std::io::Error| CliError::io(&a.out, e);
    writeln!(w, "empirical,limiting").map_err(io)?;
    for i in 0..sim.values.len().max(limit.len()) {
        let cell = |v: Option<&f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        writeln!(w, "{},{}", cell(sim.values.get(i)), cell(limit.get(i))).map_err(io)?;
    }
    w.flush().map_err(io)?;
    say(out, format!("generator {} d {} n {} reps {} limit_reps {}", generator.as_str(), a.d, a.n, a.reps, a.limit_reps))?;
    say(out, format!("rng {RNG_FAMILY} seed {}", a.seed))?;
    say(out, format!("redraws {}", sim.redraws))?;
    say(out, format!("ks {ks:.6}"))
}

fn cmd_boundary(a: &BoundaryArgs) -> CliResult<()> {
    let model = model_file::load(&a.model)?;
    if model.dimension() != 2 {
        return Err(CliError::Dimension { expected: 2, found: model.dimension() });
    }
    if a.grid < 2 || !(a.xmin < a.xmax && a.ymin < a.ymax) {
        return Err(usage("need --grid >= 2, xmin < xmax and ymin < ymax"));
    }
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (a.grid - 1) as f64;
    let mut w = create(&a.out)?;
    let io = |e: std::io::Error| CliError::io(&a.out, e);
    writeln!(w, "x,y,log_ratio,label").map_err(io)?;
    for i in 0..a.grid {
        let y = step(a.ymin, a.ymax, i);
        for j in 0..a.grid {
            let x = step(a.xmin, a.xmax, j);
            let r = log_ratio(&model, &DVector::from_vec(vec![x, y]))?;
            writeln!(w, "{x:.16e},{y:.16e},{r:.16e},{}", u8::from(r >= model.log_threshold)).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
