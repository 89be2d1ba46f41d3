//! `episeg`: fit, forecast, simulate, and evaluate workflows around the
//! Bayesian segmentation model for epidemic count series.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use episeg_cli::config::{Mode, RunConfig};
use episeg_cli::error::{render_error, Result};
use episeg_cli::{io, runner};

#[derive(Parser)]
#[command(
    name = "episeg",
    version,
    about = "Bayesian segmentation of epidemic count series",
    after_help = "Errors are reported as one JSON document on stderr with a \
                  machine-readable kind and a message."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the segmentation model to an observed case series.
    Fit(FitArgs),
    /// Fit with a sampled segment count, then draw future new cases from
    /// the posterior predictive.
    Forecast(ForecastArgs),
    /// Generate synthetic epidemic series with known segmentation.
    Simulate(SimulateArgs),
    /// Score a fitted segmentation against a ground-truth sidecar.
    Evaluate(EvaluateArgs),
}

/// Flags shared by the sampling workflows. Every flag overrides the
/// matching field of the `--config` document.
#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration; flags given here win over its fields.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base RNG seed; chain i draws from stream i of this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Total MCMC iterations per chain, burn-in included.
    #[arg(long)]
    iterations: Option<usize>,
    /// Iterations discarded from the start of each chain.
    #[arg(long = "burn-in")]
    burn_in: Option<usize>,
    /// Independent chains to run and pool.
    #[arg(long)]
    chains: Option<usize>,
    /// Also write per-chain trace CSVs.
    #[arg(long = "emit-trace")]
    emit_trace: bool,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Observed series CSV.
    input: Option<PathBuf>,
    /// Fix the segment count instead of sampling it.
    #[arg(long, value_name = "M", conflicts_with = "auto")]
    m: Option<usize>,
    /// Sample the segment count (the default when --m is absent).
    #[arg(long)]
    auto: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ForecastArgs {
    /// Observed series CSV to fit before forecasting.
    input: Option<PathBuf>,
    /// Future time points to draw.
    #[arg(long)]
    horizon: Option<usize>,
    /// Longer series whose tail scores the forecast (adds AMAPE to the
    /// summary).
    #[arg(long, value_name = "FILE")]
    actuals: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimKind {
    /// Piecewise generalized-logistic counts.
    Glc,
    /// Stochastic SIR compartments.
    Sir,
}

#[derive(Args)]
struct SimulateArgs {
    /// Generator family; defaults to glc unless the config says otherwise.
    #[arg(long, value_enum)]
    kind: Option<SimKind>,
    /// Independent replicate datasets to write.
    #[arg(long)]
    replicates: Option<usize>,
    /// JSON run configuration carrying the scenario parameters.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Scenario seed; replicate k uses this seed plus k.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// summary.json produced by a fit.
    input: Option<PathBuf>,
    /// ground_truth.json produced by simulate.
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
    /// JSON run configuration.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn load_base(config: &Option<PathBuf>) -> Result<RunConfig> {
    match config {
        Some(path) => io::read_json(path),
        None => Ok(RunConfig::default()),
    }
}

fn apply_common(cfg: &mut RunConfig, args: &CommonArgs) {
    if let Some(seed) = args.seed {
        cfg.sampler.seed = seed;
    }
    if let Some(n) = args.iterations {
        cfg.sampler.total_iterations = n;
    }
    if let Some(b) = args.burn_in {
        cfg.sampler.burn_in = b;
    }
    if let Some(c) = args.chains {
        cfg.chains = c;
    }
    if args.emit_trace {
        cfg.emit_trace = true;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
}

fn resolve_fit(args: FitArgs) -> Result<RunConfig> {
    let mut cfg = load_base(&args.common.config)?;
    apply_common(&mut cfg, &args.common);
    if let Some(input) = args.input {
        cfg.input_path = Some(input);
    }
    if let Some(m) = args.m {
        cfg.mode = Mode::FitManual;
        cfg.m_fixed = Some(m);
    } else if args.auto {
        cfg.mode = Mode::FitAuto;
        cfg.m_fixed = None;
    } else if !matches!(cfg.mode, Mode::FitManual | Mode::FitAuto) {
        cfg.mode = Mode::FitAuto;
    }
    Ok(cfg)
}

fn resolve_forecast(args: ForecastArgs) -> Result<RunConfig> {
    let mut cfg = load_base(&args.common.config)?;
    apply_common(&mut cfg, &args.common);
    cfg.mode = Mode::Forecast;
    if let Some(input) = args.input {
        cfg.input_path = Some(input);
    }
    if let Some(h) = args.horizon {
        cfg.horizon = Some(h);
    }
    if let Some(actuals) = args.actuals {
        cfg.actuals_path = Some(actuals);
    }
    Ok(cfg)
}

fn resolve_simulate(args: SimulateArgs) -> Result<RunConfig> {
    let mut cfg = load_base(&args.config)?;
    cfg.mode = match args.kind {
        Some(SimKind::Glc) => Mode::SimulateGlc,
        Some(SimKind::Sir) => Mode::SimulateSir,
        None if cfg.mode == Mode::SimulateSir => Mode::SimulateSir,
        None => Mode::SimulateGlc,
    };
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(seed) = args.seed {
        match cfg.mode {
            Mode::SimulateSir => cfg.sir.get_or_insert_with(Default::default).seed = seed,
            _ => cfg.glc.get_or_insert_with(Default::default).seed = seed,
        }
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    Ok(cfg)
}

fn resolve_evaluate(args: EvaluateArgs) -> Result<RunConfig> {
    let mut cfg = load_base(&args.config)?;
    cfg.mode = Mode::Evaluate;
    if let Some(input) = args.input {
        cfg.input_path = Some(input);
    }
    if let Some(truth) = args.truth {
        cfg.truth_path = Some(truth);
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    let config = match cli.command {
        Command::Fit(args) => resolve_fit(args)?,
        Command::Forecast(args) => resolve_forecast(args)?,
        Command::Simulate(args) => resolve_simulate(args)?,
        Command::Evaluate(args) => resolve_evaluate(args)?,
    };
    runner::run(&config)
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = execute(cli) {
        eprintln!("{}", render_error(&err));
        std::process::exit(1);
    }
}
