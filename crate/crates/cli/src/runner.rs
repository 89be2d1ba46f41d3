//! Orchestration: dispatches a validated [`RunConfig`] to the fitting,
//! simulation, or scoring workflow and writes the artifact files.

use std::fs;
use std::path::Path;

use episeg::inference::{self, ForecastResult};
use episeg::likelihood::glc_mean;
use episeg::metrics;
use episeg::sampler::auto::run_auto_chain;
use episeg::sampler::fixed::run_fixed_chain;
use episeg::simgen::{glc_batch, sir_batch};
use episeg::{ChainTrace, EpidemicSeries, PriorSpec, SamplerConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{Mode, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{
    self, ForecastArtifact, GroundTruth, LoadedSeries, MetricsArtifact, SummaryArtifact,
};

/// RNG stream reserved for posterior predictive draws, far above any
/// plausible chain index.
const FORECAST_STREAM: u64 = 1_000_000;

/// Number of worker threads: the job count, capped by `EPI_SEG_THREADS`
/// when set, otherwise by the machine's parallelism.
pub fn worker_count(jobs: usize) -> Result<usize> {
    let cap = match std::env::var("EPI_SEG_THREADS") {
        Ok(raw) => raw.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Config(format!("EPI_SEG_THREADS must be a positive integer, got {raw:?}"))
        })?,
        Err(_) => std::thread::available_parallelism().map(usize::from).unwrap_or(1),
    };
    Ok(cap.min(jobs).max(1))
}

/// Runs the configured workflow to completion, writing all artifacts into
/// the output directory.
pub fn run(config: &RunConfig) -> Result<()> {
    config.validate()?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    match config.mode {
        Mode::FitManual | Mode::FitAuto | Mode::Forecast => fit_workflow(config),
        Mode::SimulateGlc | Mode::SimulateSir => simulate_workflow(config),
        Mode::Evaluate => evaluate_workflow(config),
    }
}

/// One chain per RNG stream so chain count and scheduling cannot change
/// any draw: chain i always consumes stream i of the configured seed.
fn chain_rng(sampler: &SamplerConfig, chain_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    rng.set_stream(chain_index);
    rng
}

/// Runs all chains, in parallel batches when workers allow, and returns
/// the traces in chain order.
pub fn run_chains(
    series: &EpidemicSeries,
    prior: &PriorSpec,
    sampler: &SamplerConfig,
    m_fixed: Option<usize>,
    chains: usize,
) -> Result<Vec<ChainTrace>> {
    let one = |chain_index: usize| -> episeg::Result<ChainTrace> {
        let mut rng = chain_rng(sampler, chain_index as u64);
        match m_fixed {
            Some(m) => run_fixed_chain(series, m, prior, sampler, &mut rng),
            None => run_auto_chain(series, prior, sampler, &mut rng),
        }
    };

    let workers = worker_count(chains)?;
    let mut traces = Vec::with_capacity(chains);
    if workers == 1 {
        for i in 0..chains {
            traces.push(one(i)?);
        }
        return Ok(traces);
    }
    let indices: Vec<usize> = (0..chains).collect();
    for batch in indices.chunks(workers) {
        let outcomes: Vec<episeg::Result<ChainTrace>> = std::thread::scope(|scope| {
            let handles: Vec<_> =
                batch.iter().map(|&i| scope.spawn(move || one(i))).collect();
            handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
        });
        for outcome in outcomes {
            traces.push(outcome?);
        }
    }
    Ok(traces)
}

/// Posterior mean of the model's per-time-point expected new cases.
fn fitted_mean(trace: &ChainTrace, series: &EpidemicSeries) -> Result<Vec<f64>> {
    let t_len = series.len();
    let mut acc = vec![0.0; t_len];
    for sample in &trace.samples {
        let seg = sample.segmentation(t_len)?;
        let labels = seg.labels();
        for (t, slot) in acc.iter_mut().enumerate() {
            let theta = &sample.params[labels[t] as usize - 1];
            *slot += glc_mean(series.prev_cumulative(t), theta);
        }
    }
    let n = trace.len() as f64;
    for slot in &mut acc {
        *slot /= n;
    }
    Ok(acc)
}

fn fit_workflow(config: &RunConfig) -> Result<()> {
    let input = config.input_path.as_ref().expect("validated");
    let LoadedSeries { series, .. } = io::load_series(input)?;

    let m_fixed = if config.mode == Mode::FitManual { config.m_fixed } else { None };
    let traces = run_chains(&series, &config.prior, &config.sampler, m_fixed, config.chains)?;
    if config.emit_trace {
        for (i, trace) in traces.iter().enumerate() {
            let name = io::trace_file_name(i, config.chains);
            io::write_trace_csv(
                &io::in_dir(&config.output_dir, &name),
                trace,
                config.sampler.burn_in,
            )?;
        }
    }
    let pooled = ChainTrace::concat(traces)?;
    let summary = inference::summarize(&pooled, &series, &config.prior)?;
    let fitted = fitted_mean(&pooled, &series)?;

    let mut forecast_artifact = None;
    let mut amape = None;
    if config.mode == Mode::Forecast {
        let horizon = config.horizon.expect("validated");
        let mut rng = chain_rng(&config.sampler, FORECAST_STREAM);
        let fc: ForecastResult = inference::forecast(&pooled, &series, horizon, &mut rng)?;
        let artifact = ForecastArtifact {
            horizon,
            mean: fc.mean.clone(),
            lower: fc.intervals.iter().map(|&(lo, _)| lo).collect(),
            upper: fc.intervals.iter().map(|&(_, hi)| hi).collect(),
        };
        if let Some(actuals_path) = &config.actuals_path {
            let actuals = io::load_series(actuals_path)?;
            let needed = series.len() + horizon;
            if actuals.series.len() < needed {
                return Err(CliError::Config(format!(
                    "actuals cover {} time points but scoring the forecast needs {needed}",
                    actuals.series.len()
                )));
            }
            let future = &actuals.series.new_cases()[series.len()..needed];
            amape = Some(inference::amape(&fc.mean, future)?);
        }
        forecast_artifact = Some(artifact);
    }

    let artifact = SummaryArtifact {
        config: config.clone(),
        seed: config.sampler.seed,
        summary,
        forecast: forecast_artifact,
        amape,
    };
    io::write_json(&io::in_dir(&config.output_dir, "summary.json"), &artifact)?;
    io::write_plotdata(
        &io::in_dir(&config.output_dir, "plotdata.csv"),
        &series,
        &fitted,
        &artifact.summary.ppi,
        artifact.forecast.as_ref(),
    )?;
    Ok(())
}

fn simulate_workflow(config: &RunConfig) -> Result<()> {
    let dir = &config.output_dir;
    match config.mode {
        Mode::SimulateGlc => {
            let scenario = config.glc.clone().unwrap_or_default();
            let replicates = glc_batch(&scenario, config.replicates)?;
            write_shared_truth(dir, &GroundTruth::from_glc(&scenario, &replicates[0].1))?;
            for (k, (series, segmentation)) in replicates.iter().enumerate() {
                let mut rep_scenario = scenario.clone();
                rep_scenario.seed = scenario.seed.wrapping_add(k as u64);
                let truth = GroundTruth::from_glc(&rep_scenario, segmentation);
                write_replicate(dir, k, series, &truth)?;
            }
        }
        Mode::SimulateSir => {
            let scenario = config.sir.clone().unwrap_or_default();
            let replicates = sir_batch(&scenario, config.replicates)?;
            write_shared_truth(dir, &GroundTruth::from_sir(&scenario, &replicates[0].1))?;
            for (k, (series, segmentation)) in replicates.iter().enumerate() {
                let mut rep_scenario = scenario.clone();
                rep_scenario.seed = scenario.seed.wrapping_add(k as u64);
                let truth = GroundTruth::from_sir(&rep_scenario, segmentation);
                write_replicate(dir, k, series, &truth)?;
            }
        }
        _ => unreachable!("dispatched on simulate modes only"),
    }
    Ok(())
}

fn write_shared_truth(dir: &Path, truth: &GroundTruth) -> Result<()> {
    io::write_json(&io::in_dir(dir, "ground_truth.json"), truth)
}

fn write_replicate(
    dir: &Path,
    k: usize,
    series: &EpidemicSeries,
    truth: &GroundTruth,
) -> Result<()> {
    let (series_name, truth_name) = io::replicate_file_names(k);
    io::write_series(&io::in_dir(dir, &series_name), series, None)?;
    io::write_json(&io::in_dir(dir, &truth_name), truth)
}

fn evaluate_workflow(config: &RunConfig) -> Result<()> {
    let input = config.input_path.as_ref().expect("validated");
    let truth_path = config.truth_path.as_ref().expect("validated");
    let fitted: SummaryArtifact = io::read_json(input)?;
    let truth: GroundTruth = io::read_json(truth_path)?;
    let estimate = fitted.summary.map_state.segmentation.labels();
    let artifact = MetricsArtifact {
        ari: metrics::ari(&truth.labels, estimate)?,
        mutual_information: metrics::mutual_information(&truth.labels, estimate)?,
        nvi: metrics::nvi(&truth.labels, estimate)?,
        f_measure: metrics::f_measure(&truth.labels, estimate)?,
    };
    io::write_json(&io::in_dir(&config.output_dir, "metrics.json"), &artifact)
}
