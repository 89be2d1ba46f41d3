//! Posterior summaries: point estimates, inclusion probabilities, credible
//! intervals, forecasts, and forecast scoring.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::likelihood::glc_mean;
use crate::params::{ModelState, PriorSpec};
use crate::prior::{bern_log_mass, log_indicator_partitions};
use crate::series::EpidemicSeries;
use crate::stats::{nb_draw, quantile_type7};
use crate::trace::ChainTrace;

/// Significance level used by [`summarize`] for change-point intervals.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Quantile probabilities used by [`summarize`].
pub const DEFAULT_QUANTILE_PROBS: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

/// A change point with its credible interval, all as time indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangepointInterval {
    pub time: usize,
    pub lo: usize,
    pub hi: usize,
}

/// Empirical quantiles of one segment's parameters, parallel to the
/// requested probability grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentQuantiles {
    pub final_size: Vec<f64>,
    pub growth_rate: Vec<f64>,
    pub scaling: Vec<f64>,
}

/// Parameter quantiles of a trace. Segment-wise entries condition on the
/// posterior-modal segment count, because segment identities are only
/// comparable between samples of equal dimension; the dispersion pools all
/// samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamQuantiles {
    pub probs: Vec<f64>,
    pub modal_m: usize,
    pub segments: Vec<SegmentQuantiles>,
    pub dispersion: Vec<f64>,
}

/// Everything the fit subcommand reports about a posterior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub map_state: ModelState,
    pub ppi: Vec<f64>,
    pub changepoints: Vec<ChangepointInterval>,
    pub param_quantiles: ParamQuantiles,
    pub m_posterior: BTreeMap<usize, f64>,
}

/// Forecast draws and their row summaries. `draws[t][b]` is the new-case
/// draw of retained sample `b` at forecast step `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub horizon: usize,
    pub draws: Vec<Vec<u64>>,
    pub mean: Vec<f64>,
    pub intervals: Vec<(f64, f64)>,
}

fn require_nonempty(trace: &ChainTrace) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(())
}

/// Returns the retained sample with the highest log-likelihood plus
/// conditional indicator log-prior π(δ | M); ties keep the earliest sample.
///
/// The likelihood comes from the stored per-sample value; the indicator
/// term is recomputed so that traces of both samplers rank identically.
pub fn map_estimate(
    trace: &ChainTrace,
    series: &EpidemicSeries,
    prior: &PriorSpec,
) -> Result<ModelState> {
    require_nonempty(trace)?;
    if trace.series_len != series.len() {
        return Err(Error::LengthMismatch(format!(
            "trace covers {} time points but the series has {}",
            trace.series_len,
            series.len()
        )));
    }
    let max_m = trace.samples.iter().map(|s| s.segment_count()).max().unwrap_or(1);
    let ln_z = log_indicator_partitions(series.len(), prior, max_m);
    let mut best_index = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, sample) in trace.samples.iter().enumerate() {
        let cps: Vec<usize> = sample.changepoints.iter().map(|&t| t as usize).collect();
        let lp_delta = bern_log_mass(series.len(), &cps, prior) - ln_z[sample.segment_count()];
        let score = sample.log_lik + lp_delta;
        if score > best_score {
            best_score = score;
            best_index = i;
        }
    }
    let sample = &trace.samples[best_index];
    Ok(ModelState {
        segmentation: sample.segmentation(series.len())?,
        params: sample.params.clone(),
        dispersion: sample.dispersion,
    })
}

/// Posterior probability of inclusion per time point: the fraction of
/// retained samples whose indicator is 1 there. Index 0 is always 1.
pub fn compute_ppi(trace: &ChainTrace) -> Result<Vec<f64>> {
    require_nonempty(trace)?;
    let mut counts = vec![0u64; trace.series_len];
    for sample in &trace.samples {
        for &t in &sample.changepoints {
            counts[t as usize] += 1;
        }
    }
    let b = trace.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / b).collect())
}

/// Sum over samples of δ_t, and of δ_t·δ_u, for the correlation test.
fn column(trace: &ChainTrace, t: u32) -> Vec<bool> {
    trace
        .samples
        .iter()
        .map(|s| s.changepoints.binary_search(&t).is_ok())
        .collect()
}

/// One-sided Pearson test for negative correlation between two binary
/// indicator columns: `Some(true)` rejects independence in favor of
/// negative correlation at level `alpha`; `None` means the correlation is
/// undefined because a column is constant.
fn rejects_negative(x: &[bool], y: &[bool], critical: f64) -> Option<bool> {
    let b = x.len() as f64;
    let nx = x.iter().filter(|&&v| v).count() as f64;
    let ny = y.iter().filter(|&&v| v).count() as f64;
    if nx == 0.0 || nx == b || ny == 0.0 || ny == b {
        return None;
    }
    let nxy = x.iter().zip(y).filter(|&(&a, &c)| a && c).count() as f64;
    let denominator = (nx * (b - nx) * ny * (b - ny)).sqrt();
    let r = ((b * nxy - nx * ny) / denominator).clamp(-1.0, 1.0);
    if r <= -1.0 {
        return Some(true);
    }
    if r >= 1.0 {
        return Some(false);
    }
    let t_stat = r * ((b - 2.0) / (1.0 - r * r)).sqrt();
    Some(t_stat < critical)
}

/// Credible intervals around each change point of `map_state`.
///
/// From each change point the interval grows one step at a time in each
/// direction while the neighbor's indicator column is significantly
/// negatively correlated with the change point's own column (one-sided
/// Pearson test via the t statistic with B−2 degrees of freedom). Growth
/// stops at the series boundary, at an undefined correlation, or at the
/// first non-rejection.
pub fn changepoint_intervals(
    trace: &ChainTrace,
    map_state: &ModelState,
    alpha: f64,
) -> Result<Vec<ChangepointInterval>> {
    require_nonempty(trace)?;
    let b = trace.len();
    if b < 10 {
        return Err(Error::Invalid(format!(
            "correlation tests need at least 10 retained samples, got {b}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let critical = StudentsT::new(0.0, 1.0, (b - 2) as f64)
        .expect("valid degrees of freedom")
        .inverse_cdf(alpha);
    let t_len = trace.series_len;
    let mut intervals = Vec::new();
    for &cp in map_state.segmentation.changepoints().iter() {
        let cp = cp as usize;
        let own = column(trace, cp as u32);
        let mut lo = cp;
        while lo > 0 {
            let neighbor = column(trace, (lo - 1) as u32);
            if rejects_negative(&own, &neighbor, critical) != Some(true) {
                break;
            }
            lo -= 1;
        }
        let mut hi = cp;
        while hi + 1 < t_len {
            let neighbor = column(trace, (hi + 1) as u32);
            if rejects_negative(&own, &neighbor, critical) != Some(true) {
                break;
            }
            hi += 1;
        }
        intervals.push(ChangepointInterval { time: cp, lo, hi });
    }
    Ok(intervals)
}

fn quantiles_of(values: &mut Vec<f64>, probs: &[f64]) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite parameter values"));
    probs.iter().map(|&p| quantile_type7(values, p)).collect()
}

/// Empirical parameter quantiles (type-7 linear interpolation).
///
/// The modal segment count is the most frequent M in the trace, smallest
/// value on ties; per-segment quantiles use only samples with that M.
pub fn parameter_quantiles(trace: &ChainTrace, probs: &[f64]) -> Result<ParamQuantiles> {
    require_nonempty(trace)?;
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Invalid(format!("quantile probability {p} outside [0, 1]")));
        }
    }
    let mut m_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for sample in &trace.samples {
        *m_counts.entry(sample.segment_count()).or_insert(0) += 1;
    }
    // Ascending key order makes the strict comparison keep the smallest
    // modal value on ties.
    let modal_m = m_counts
        .iter()
        .fold((0usize, 0usize), |best, (&m, &c)| if c > best.1 { (m, c) } else { best })
        .0;
    let mut segments = Vec::with_capacity(modal_m);
    for segment in 0..modal_m {
        let mut k = Vec::new();
        let mut lambda = Vec::new();
        let mut p = Vec::new();
        for sample in &trace.samples {
            if sample.segment_count() == modal_m {
                k.push(sample.params[segment].final_size);
                lambda.push(sample.params[segment].growth_rate);
                p.push(sample.params[segment].scaling);
            }
        }
        segments.push(SegmentQuantiles {
            final_size: quantiles_of(&mut k, probs),
            growth_rate: quantiles_of(&mut lambda, probs),
            scaling: quantiles_of(&mut p, probs),
        });
    }
    let mut phi: Vec<f64> = trace.samples.iter().map(|s| s.dispersion).collect();
    Ok(ParamQuantiles {
        probs: probs.to_vec(),
        modal_m,
        segments,
        dispersion: quantiles_of(&mut phi, probs),
    })
}

/// Relative frequency of each segment count in the trace.
pub fn m_posterior(trace: &ChainTrace) -> Result<BTreeMap<usize, f64>> {
    require_nonempty(trace)?;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for sample in &trace.samples {
        *counts.entry(sample.segment_count()).or_insert(0) += 1;
    }
    let b = trace.len() as f64;
    Ok(counts.into_iter().map(|(m, c)| (m, c as f64 / b)).collect())
}

/// Full posterior report at the default significance level and quantile
/// grid.
pub fn summarize(
    trace: &ChainTrace,
    series: &EpidemicSeries,
    prior: &PriorSpec,
) -> Result<PosteriorSummary> {
    let map_state = map_estimate(trace, series, prior)?;
    let ppi = compute_ppi(trace)?;
    let changepoints = changepoint_intervals(trace, &map_state, DEFAULT_ALPHA)?;
    let param_quantiles = parameter_quantiles(trace, &DEFAULT_QUANTILE_PROBS)?;
    let m_posterior = m_posterior(trace)?;
    Ok(PosteriorSummary { map_state, ppi, changepoints, param_quantiles, m_posterior })
}

/// Posterior predictive draws of future new cases.
///
/// Each retained sample continues the observed cumulative count with its
/// own last-segment parameters and dispersion: new cases at each step are
/// negative binomial around the growth-curve mean, then fold into the
/// running cumulative count. Draw order is sample-major, so a seeded RNG
/// reproduces the matrix exactly.
pub fn forecast(
    trace: &ChainTrace,
    series: &EpidemicSeries,
    horizon: usize,
    rng: &mut impl Rng,
) -> Result<ForecastResult> {
    require_nonempty(trace)?;
    if horizon == 0 {
        return Err(Error::Invalid("forecast horizon must be at least 1".into()));
    }
    if trace.series_len != series.len() {
        return Err(Error::LengthMismatch(format!(
            "trace covers {} time points but the series has {}",
            trace.series_len,
            series.len()
        )));
    }
    let b_n = trace.len();
    let mut draws = vec![vec![0u64; b_n]; horizon];
    let c_last = *series.cumulative().last().expect("series is nonempty");
    for (b, sample) in trace.samples.iter().enumerate() {
        let theta = *sample.params.last().expect("at least one segment");
        let mut cumulative = c_last;
        for row in draws.iter_mut() {
            let mean = glc_mean(cumulative, &theta);
            let inc = nb_draw(rng, mean, sample.dispersion);
            row[b] = inc;
            cumulative = cumulative.saturating_add(inc);
        }
    }
    let mut mean = Vec::with_capacity(horizon);
    let mut intervals = Vec::with_capacity(horizon);
    for row in &draws {
        mean.push(row.iter().map(|&v| v as f64).sum::<f64>() / b_n as f64);
        let mut sorted: Vec<f64> = row.iter().map(|&v| v as f64).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
        intervals.push((quantile_type7(&sorted, 0.025), quantile_type7(&sorted, 0.975)));
    }
    Ok(ForecastResult { horizon, draws, mean, intervals })
}

/// Adjusted mean absolute percentage error: the average of
/// |1 − forecast/actual| with actual counts of zero replaced by one.
pub fn amape(forecast_mean: &[f64], actual: &[u64]) -> Result<f64> {
    if forecast_mean.len() != actual.len() {
        return Err(Error::LengthMismatch(format!(
            "forecast has {} entries but actuals have {}",
            forecast_mean.len(),
            actual.len()
        )));
    }
    if forecast_mean.is_empty() {
        return Err(Error::Invalid("cannot score an empty forecast".into()));
    }
    let total: f64 = forecast_mean
        .iter()
        .zip(actual)
        .map(|(&f, &y)| {
            let denom = if y == 0 { 1.0 } else { y as f64 };
            (1.0 - f / denom).abs()
        })
        .sum();
    Ok(total / forecast_mean.len() as f64)
}
