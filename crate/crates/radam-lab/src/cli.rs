//! Command-line front end. Every command validates its whole
//! configuration first, computes into memory, and only then writes the
//! output file, so a failed invocation leaves nothing behind.
//!
//! Reals in CSV output are printed with 17 significant digits (exact
//! round trip for 64-bit floats) and LF line endings; missing values are
//! empty fields. JSON config files merge under the flags: a flag beats
//! the file, the file beats the built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::bench::{self, lr_sweep, make_problem, ProblemSpec, SweepRow};
use crate::error::{Error, Result};
use crate::optim::{Optimizer, OptimizerConfig, Variant};
use crate::run::{run_loop, InstrumentationFlags};
use crate::schedule::Schedule;
use crate::sim::{approx_error_curve, simulate_rate_variance, SimConfig};
use crate::variance;

#[derive(Parser)]
#[command(
    name = "radam-lab",
    version,
    about = "Adaptive-rate variance experiments: rectified Adam against its baselines"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate rho_t, the rectifier, and both variance formulas per step
    VarianceCurve(VarianceCurveArgs),
    /// Ensemble variance of the raw vs rectified adaptive rate
    Simulate(SimulateArgs),
    /// Exact vs first-order variance over a rho grid
    ApproxError(ApproxErrorArgs),
    /// One optimizer on one problem, full run record as JSON
    Train(Box<TrainArgs>),
    /// Cartesian product of optimizers x learning rates x seeds
    Sweep(SweepArgs),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::VarianceCurve(args) => cmd_variance_curve(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::ApproxError(args) => cmd_approx_error(args),
        Command::Train(args) => cmd_train(*args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.display().to_string(),
        source,
    })
}

fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    match workers {
        None => f(),
        Some(0) => Err(Error::InvalidConfig("--workers must be >= 1".to_string())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("--workers: {e}")))?;
            pool.install(f)
        }
    }
}

// ---------------------------------------------------------------- variance-curve

#[derive(Args)]
struct VarianceCurveArgs {
    /// EMA coefficient of the second moment
    #[arg(long)]
    beta2: Option<f64>,
    /// Last step to tabulate
    #[arg(long)]
    t_max: Option<usize>,
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct VarianceCurveFile {
    beta2: Option<f64>,
    t_max: Option<usize>,
}

fn cmd_variance_curve(args: VarianceCurveArgs) -> Result<()> {
    let file: VarianceCurveFile = match &args.config {
        Some(path) => read_config(path)?,
        None => VarianceCurveFile::default(),
    };
    let beta2 = args.beta2.or(file.beta2).unwrap_or(0.999);
    let t_max = args.t_max.or(file.t_max).unwrap_or(6000);
    if !(0.0 < beta2 && beta2 < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "--beta2 must lie in (0, 1), got {beta2}"
        )));
    }
    if t_max < 5 {
        return Err(Error::InvalidConfig(format!(
            "--t-max must be >= 5, got {t_max}"
        )));
    }
    let inf = variance::rho_inf(beta2)?;
    if !(inf > 4.0) {
        return Err(Error::DegenerateConfig(format!(
            "rho_inf = {inf} <= 4 for beta2 = {beta2}; no step ever has a tractable variance"
        )));
    }
    let mut buf = String::with_capacity(96 * (t_max + 1));
    buf.push_str("t,rho_t,rect_term,var_exact,var_approx\n");
    for t in 1..=t_max {
        let rho = variance::rho_t(t, beta2)?;
        if rho > 4.0 {
            let rect = variance::rect_term(t, beta2)?;
            let exact = variance::var_exact(rho, 1.0)?;
            let approx = variance::var_approx(rho, 1.0)?;
            buf.push_str(&format!(
                "{t},{},{},{},{}\n",
                fmt_real(rho),
                fmt_real(rect),
                fmt_real(exact),
                fmt_real(approx)
            ));
        } else {
            buf.push_str(&format!("{t},{},,,\n", fmt_real(rho)));
        }
    }
    write_file(&args.out, &buf)?;
    eprintln!(
        "variance-curve: beta2 = {beta2}, wrote {t_max} rows to {}",
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------- simulate

#[derive(Args)]
struct SimulateArgs {
    /// Gradient mean (g ~ N(mu, 1))
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Epsilon added to sqrt(v) in the simulated rate
    #[arg(long)]
    epsilon: Option<f64>,
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (default: one per core)
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimFile {
    mu: Option<f64>,
    beta2: Option<f64>,
    trajectories: Option<usize>,
    steps: Option<usize>,
    seed: Option<u64>,
    epsilon: Option<f64>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let file: SimFile = match &args.config {
        Some(path) => read_config(path)?,
        None => SimFile::default(),
    };
    let defaults = SimConfig::default();
    let cfg = SimConfig {
        mu: args.mu.or(file.mu).unwrap_or(defaults.mu),
        beta2: args.beta2.or(file.beta2).unwrap_or(defaults.beta2),
        trajectories: args
            .trajectories
            .or(file.trajectories)
            .unwrap_or(defaults.trajectories),
        steps: args.steps.or(file.steps).unwrap_or(defaults.steps),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        epsilon: args.epsilon.or(file.epsilon).unwrap_or(defaults.epsilon),
    };
    let series = with_workers(args.workers, || simulate_rate_variance(&cfg))?;
    let mut buf = String::with_capacity(80 * (series.var_raw.len() + 1));
    buf.push_str("t,var_raw,var_rectified,rect_term\n");
    for (j, (raw, rectified)) in series.var_raw.iter().zip(&series.var_rectified).enumerate() {
        let t = series.start_t + j;
        let rect = variance::rect_term(t, cfg.beta2)?;
        buf.push_str(&format!(
            "{t},{},{},{}\n",
            fmt_real(*raw),
            fmt_real(*rectified),
            fmt_real(rect)
        ));
    }
    write_file(&args.out, &buf)?;
    eprintln!(
        "simulate: mu = {}, {} trajectories x {} steps, start_t = {}, wrote {} rows to {}",
        cfg.mu,
        cfg.trajectories,
        cfg.steps,
        series.start_t,
        series.var_raw.len(),
        args.out.display()
    );
    Ok(())
}

// ------------------------------------------------------------------ approx-error

#[derive(Args)]
struct ApproxErrorArgs {
    #[arg(long)]
    rho_min: Option<f64>,
    #[arg(long)]
    rho_max: Option<f64>,
    /// Grid spacing in rho
    #[arg(long)]
    step: Option<f64>,
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ApproxErrorFile {
    rho_min: Option<f64>,
    rho_max: Option<f64>,
    step: Option<f64>,
}

fn cmd_approx_error(args: ApproxErrorArgs) -> Result<()> {
    let file: ApproxErrorFile = match &args.config {
        Some(path) => read_config(path)?,
        None => ApproxErrorFile::default(),
    };
    let rho_min = args.rho_min.or(file.rho_min).unwrap_or(5.0);
    let rho_max = args.rho_max.or(file.rho_max).unwrap_or(500.0);
    let step = args.step.or(file.step).unwrap_or(1.0);
    let rows = approx_error_curve(rho_min, rho_max, step)?;
    let mut buf = String::with_capacity(80 * (rows.len() + 1));
    buf.push_str("rho,var_exact,var_approx,abs_diff\n");
    for row in &rows {
        buf.push_str(&format!(
            "{},{},{},{}\n",
            fmt_real(row.rho),
            fmt_real(row.var_exact),
            fmt_real(row.var_approx),
            fmt_real(row.abs_diff)
        ));
    }
    write_file(&args.out, &buf)?;
    eprintln!(
        "approx-error: rho in [{rho_min}, {rho_max}] step {step}, wrote {} rows to {}",
        rows.len(),
        args.out.display()
    );
    Ok(())
}

// ------------------------------------------------------------------------- train

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ProblemName {
    Quadratic,
    Logistic,
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ScheduleName {
    Constant,
    LinearWarmup,
    LinearDecay,
    PiecewiseDecay,
    Composed,
}

/// Tail schedules a warmup can compose into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ThenName {
    Constant,
    LinearDecay,
    PiecewiseDecay,
}

#[derive(Args)]
struct TrainArgs {
    /// Objective to optimize
    #[arg(long, value_enum)]
    problem: Option<ProblemName>,
    /// Feature dimension (quadratic and logistic)
    #[arg(long)]
    dim: Option<usize>,
    /// Curvature spread of the quadratic
    #[arg(long)]
    condition_number: Option<f64>,
    /// Gradient noise of the quadratic
    #[arg(long)]
    noise_std: Option<f64>,
    /// Dataset size (logistic and mlp)
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Hidden width of the mlp
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long, value_enum)]
    optimizer: Option<Variant>,
    /// Peak learning rate (the schedule's alpha0)
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// true: decay the parameters after the update; false: fold
    /// lambda * theta into the gradient
    #[arg(long)]
    decoupled: Option<bool>,
    /// SGDM momentum coefficient
    #[arg(long)]
    momentum: Option<f64>,
    /// Adam only: steps with m and theta frozen while v accumulates
    #[arg(long)]
    freeze_steps: Option<usize>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleName>,
    #[arg(long)]
    warmup_steps: Option<usize>,
    /// Decay horizon (defaults to the run length)
    #[arg(long)]
    total_steps: Option<usize>,
    /// Comma-separated piecewise milestones
    #[arg(long, value_delimiter = ',')]
    milestones: Option<Vec<usize>>,
    #[arg(long)]
    factor: Option<f64>,
    /// Tail of a composed schedule
    #[arg(long, value_enum)]
    then: Option<ThenName>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Log gradient histograms into the record
    #[arg(long)]
    hist: bool,
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainFile {
    problem: Option<ProblemName>,
    dim: Option<usize>,
    condition_number: Option<f64>,
    noise_std: Option<f64>,
    samples: Option<usize>,
    batch_size: Option<usize>,
    hidden: Option<usize>,
    optimizer: Option<Variant>,
    lr: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    eps: Option<f64>,
    weight_decay: Option<f64>,
    decoupled: Option<bool>,
    momentum: Option<f64>,
    freeze_steps: Option<usize>,
    schedule: Option<ScheduleName>,
    warmup_steps: Option<usize>,
    total_steps: Option<usize>,
    milestones: Option<Vec<usize>>,
    factor: Option<f64>,
    then: Option<ThenName>,
    steps: Option<usize>,
    seed: Option<u64>,
    hist: Option<bool>,
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let file: TrainFile = match &args.config {
        Some(path) => read_config(path)?,
        None => TrainFile::default(),
    };

    let spec = match args
        .problem
        .or(file.problem)
        .unwrap_or(ProblemName::Quadratic)
    {
        ProblemName::Quadratic => ProblemSpec::NoisyQuadratic {
            dim: args
                .dim
                .or(file.dim)
                .unwrap_or(bench::DEFAULT_QUADRATIC_DIM),
            condition_number: args
                .condition_number
                .or(file.condition_number)
                .unwrap_or(bench::DEFAULT_CONDITION_NUMBER),
            noise_std: args
                .noise_std
                .or(file.noise_std)
                .unwrap_or(bench::DEFAULT_NOISE_STD),
        },
        ProblemName::Logistic => ProblemSpec::LogisticRegression {
            dim: args.dim.or(file.dim).unwrap_or(bench::DEFAULT_LOGISTIC_DIM),
            samples: args
                .samples
                .or(file.samples)
                .unwrap_or(bench::DEFAULT_SAMPLES),
            batch_size: args
                .batch_size
                .or(file.batch_size)
                .unwrap_or(bench::DEFAULT_BATCH_SIZE),
        },
        ProblemName::Mlp => ProblemSpec::SmallMlp {
            hidden: args.hidden.or(file.hidden).unwrap_or(bench::DEFAULT_HIDDEN),
            samples: args
                .samples
                .or(file.samples)
                .unwrap_or(bench::DEFAULT_SAMPLES),
            batch_size: args
                .batch_size
                .or(file.batch_size)
                .unwrap_or(bench::DEFAULT_BATCH_SIZE),
        },
    };

    let optimizer_defaults = OptimizerConfig::default();
    let config = OptimizerConfig {
        variant: args
            .optimizer
            .or(file.optimizer)
            .unwrap_or(optimizer_defaults.variant),
        beta1: args
            .beta1
            .or(file.beta1)
            .unwrap_or(optimizer_defaults.beta1),
        beta2: args
            .beta2
            .or(file.beta2)
            .unwrap_or(optimizer_defaults.beta2),
        eps: args.eps.or(file.eps).unwrap_or(optimizer_defaults.eps),
        weight_decay: args
            .weight_decay
            .or(file.weight_decay)
            .unwrap_or(optimizer_defaults.weight_decay),
        decoupled: args
            .decoupled
            .or(file.decoupled)
            .unwrap_or(optimizer_defaults.decoupled),
        freeze_steps: args
            .freeze_steps
            .or(file.freeze_steps)
            .unwrap_or(optimizer_defaults.freeze_steps),
        momentum: args
            .momentum
            .or(file.momentum)
            .unwrap_or(optimizer_defaults.momentum),
    };

    let steps = args.steps.or(file.steps).unwrap_or(1000);
    if steps == 0 {
        return Err(Error::InvalidConfig("--steps must be >= 1".to_string()));
    }
    let seed = args.seed.or(file.seed).unwrap_or(42);
    let lr = args.lr.or(file.lr).unwrap_or(0.01);
    let warmup_steps = args.warmup_steps.or(file.warmup_steps).unwrap_or(500);
    let total_steps = args.total_steps.or(file.total_steps).unwrap_or(steps);
    let milestones = args.milestones.or(file.milestones).unwrap_or_default();
    let factor = args.factor.or(file.factor).unwrap_or(0.1);
    let then = args.then.or(file.then).unwrap_or(ThenName::Constant);
    let tail = |then: ThenName| -> Schedule {
        match then {
            ThenName::Constant => Schedule::Constant { alpha0: lr },
            ThenName::LinearDecay => Schedule::LinearDecay {
                alpha0: lr,
                total_steps,
            },
            ThenName::PiecewiseDecay => Schedule::PiecewiseDecay {
                alpha0: lr,
                milestones: milestones.clone(),
                factor,
            },
        }
    };
    let schedule = match args
        .schedule
        .or(file.schedule)
        .unwrap_or(ScheduleName::Constant)
    {
        ScheduleName::Constant => Schedule::Constant { alpha0: lr },
        ScheduleName::LinearWarmup => Schedule::LinearWarmup {
            alpha0: lr,
            warmup_steps,
        },
        ScheduleName::LinearDecay => Schedule::LinearDecay {
            alpha0: lr,
            total_steps,
        },
        ScheduleName::PiecewiseDecay => Schedule::PiecewiseDecay {
            alpha0: lr,
            milestones: milestones.clone(),
            factor,
        },
        ScheduleName::Composed => Schedule::Composed {
            warmup: Box::new(Schedule::LinearWarmup {
                alpha0: lr,
                warmup_steps,
            }),
            then: Box::new(tail(then)),
        },
    };
    schedule.validate()?;
    let hist = if args.hist {
        true
    } else {
        file.hist.unwrap_or(false)
    };

    let problem = make_problem(&spec, seed)?;
    let mut optimizer = Optimizer::new(config.clone(), problem.dim())?;
    if config.freeze_steps > 0 {
        eprintln!(
            "train: first {} steps only season v; displayed indices are t - {}, so updates start at 1",
            config.freeze_steps, config.freeze_steps
        );
    }
    let record = run_loop(
        &problem,
        &mut optimizer,
        &schedule,
        steps,
        seed,
        InstrumentationFlags {
            grad_histograms: hist,
        },
    );
    let executed = record.losses.len();
    let divergent = record.divergent;
    let mut json = serde_json::to_string_pretty(&record).expect("record serializes");
    json.push('\n');
    write_file(&args.out, &json)?;
    let offset = config.freeze_steps as i64;
    eprintln!(
        "train: {} on {} with {} schedule, ran {}/{} steps (displayed {} to {}){}, wrote {}",
        record.optimizer,
        spec.tag(),
        record.schedule,
        executed,
        steps,
        1 - offset,
        executed as i64 - offset,
        if divergent { ", diverged" } else { "" },
        args.out.display()
    );
    Ok(())
}

// ------------------------------------------------------------------------- sweep

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep description; omitted keys use the built-in preset
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (default: one per core)
    #[arg(long)]
    workers: Option<usize>,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    problem: Option<ProblemSpec>,
    optimizers: Option<Vec<OptimizerConfig>>,
    schedule: Option<Schedule>,
    learning_rates: Option<Vec<f64>>,
    steps: Option<usize>,
    seeds: Option<Vec<u64>>,
}

fn sweep_default_optimizers() -> Vec<OptimizerConfig> {
    vec![
        OptimizerConfig {
            variant: Variant::Radam,
            ..OptimizerConfig::default()
        },
        OptimizerConfig::default(),
    ]
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let file: SweepFile = match &args.config {
        Some(path) => read_config(path)?,
        None => SweepFile::default(),
    };
    let spec = file.problem.unwrap_or_default();
    let optimizers = file.optimizers.unwrap_or_else(sweep_default_optimizers);
    let schedule = file.schedule.unwrap_or(Schedule::Constant { alpha0: 0.01 });
    let learning_rates = file
        .learning_rates
        .unwrap_or_else(|| vec![0.1, 0.03, 0.01, 0.003]);
    let steps = file.steps.unwrap_or(8000);
    let seeds = file.seeds.unwrap_or_else(|| vec![0, 1, 2, 3, 4]);

    let rows: Vec<SweepRow> = with_workers(args.workers, || {
        lr_sweep(
            &spec,
            &optimizers,
            &schedule,
            &learning_rates,
            steps,
            &seeds,
        )
    })?;
    let mut buf = String::with_capacity(96 * (rows.len() + 1));
    buf.push_str("optimizer,lr,seed,final_loss,best_loss,divergent,tail_mean_loss\n");
    for row in &rows {
        buf.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.optimizer,
            fmt_real(row.lr),
            row.seed,
            fmt_opt(row.final_loss),
            fmt_opt(row.best_loss),
            row.divergent,
            fmt_opt(row.tail_mean_loss)
        ));
    }
    write_file(&args.out, &buf)?;
    eprintln!(
        "sweep: {} steps on {}, {} rows ({} optimizers x {} lrs x {} seeds), wrote {}",
        steps,
        spec.tag(),
        rows.len(),
        optimizers.len(),
        learning_rates.len(),
        seeds.len(),
        args.out.display()
    );
    Ok(())
}
