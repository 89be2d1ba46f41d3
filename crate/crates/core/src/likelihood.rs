//! Negative-binomial likelihood with a generalized-logistic mean.
//!
//! Daily new cases Ċ_t in segment m are modeled as
//!
//! ```text
//! Ċ_t | C_{t−1} ~ NB(μ_t, φ),   μ_t = λ_m · C_{t−1}^{p_m} · (1 − C_{t−1}/K_m)
//! ```
//!
//! where the NB distribution is parameterized by mean μ and dispersion φ
//! with variance μ + μ²/φ. The mean is the discretized generalized-logistic
//! growth increment: proportional growth λC^p damped by the saturation term
//! (1 − C/K) as the cumulative count approaches the segment's final size K.

use crate::error::{Error, Result};
use crate::params::{ModelState, SegmentParams};
use crate::segmentation::Segmentation;
use crate::series::EpidemicSeries;
use crate::stats::ln_gamma;

/// Smallest mean the growth curve is allowed to produce. Proposals with
/// C_{t−1} ≥ K would give a nonpositive mean and an undefined NB pmf; the
/// floor keeps the density finite so such states lose on likelihood and are
/// rejected by the Metropolis step rather than crashing the chain.
pub const MEAN_FLOOR: f64 = 1e-10;

/// Expected new cases given the previous cumulative count, floored at
/// [`MEAN_FLOOR`]. Uses the convention 0⁰ = 1 so the p → 0 limit (growth
/// independent of the current count) stays continuous at C = 0.
pub fn glc_mean(prev_cumulative: u64, params: &SegmentParams) -> f64 {
    let c = prev_cumulative as f64;
    // f64::powf already returns 1.0 for 0^0, which is exactly the
    // convention wanted here.
    let raw = params.growth_rate * c.powf(params.scaling) * (1.0 - c / params.final_size);
    raw.max(MEAN_FLOOR)
}

/// Log of the NB(μ, φ) probability mass at `count`:
///
/// ```text
/// ln Γ(y+φ) − ln y! − ln Γ(φ) + φ ln(φ/(μ+φ)) + y ln(μ/(μ+φ))
/// ```
///
/// Stays in log space throughout, so large counts cannot overflow.
pub fn nb_log_pmf(count: u64, mean: f64, dispersion: f64) -> Result<f64> {
    if !(mean > 0.0) {
        return Err(Error::Domain(format!("NB mean must be positive, got {mean}")));
    }
    if !(dispersion > 0.0) {
        return Err(Error::Domain(format!("NB dispersion must be positive, got {dispersion}")));
    }
    Ok(nb_log_pmf_unchecked(count, mean, dispersion, ln_gamma(dispersion)))
}

/// Shared pmf kernel with ln Γ(φ) precomputed, so segment sums evaluate the
/// slowly varying term once. Caller guarantees positive mean and dispersion.
#[inline]
pub(crate) fn nb_log_pmf_unchecked(count: u64, mean: f64, dispersion: f64, ln_gamma_disp: f64) -> f64 {
    nb_log_pmf_cached(count, mean, dispersion, ln_gamma_disp, ln_gamma(count as f64 + 1.0))
}

/// Innermost pmf kernel with both ln Γ(φ) and ln y! precomputed. Every pmf
/// evaluation in the crate funnels through this function, so cached and
/// uncached paths agree bit for bit.
#[inline]
pub(crate) fn nb_log_pmf_cached(
    count: u64,
    mean: f64,
    dispersion: f64,
    ln_gamma_disp: f64,
    ln_factorial_count: f64,
) -> f64 {
    let y = count as f64;
    ln_gamma(y + dispersion) - ln_factorial_count - ln_gamma_disp
        + dispersion * (dispersion / (mean + dispersion)).ln()
        + y * (mean / (mean + dispersion)).ln()
}

/// Log-likelihood contribution of 1-based segment `segment_index`: the sum
/// of NB log-pmfs over its time points, each with mean
/// `glc_mean(C_{t−1}, Θ_m)`.
pub fn segment_log_lik(
    series: &EpidemicSeries,
    segmentation: &Segmentation,
    segment_index: usize,
    params: &SegmentParams,
    dispersion: f64,
) -> Result<f64> {
    if series.len() != segmentation.len() {
        return Err(Error::LengthMismatch(format!(
            "series length {} does not match segmentation length {}",
            series.len(),
            segmentation.len()
        )));
    }
    if segment_index == 0 || segment_index > segmentation.segment_count() {
        return Err(Error::Invalid(format!(
            "segment index {segment_index} out of range 1..={}",
            segmentation.segment_count()
        )));
    }
    if !(dispersion > 0.0) {
        return Err(Error::Domain(format!("NB dispersion must be positive, got {dispersion}")));
    }
    let (start, end) = segmentation.segment_bounds()[segment_index - 1];
    let ln_gamma_disp = ln_gamma(dispersion);
    let mut total = 0.0;
    for t in start..end {
        let mean = glc_mean(series.prev_cumulative(t), params);
        total += nb_log_pmf_unchecked(series.new_cases()[t], mean, dispersion, ln_gamma_disp);
    }
    Ok(total)
}

/// Full log-likelihood of a model state: the sum of all segment
/// contributions, each under its own parameter triple.
pub fn full_log_lik(series: &EpidemicSeries, state: &ModelState) -> Result<f64> {
    state.validate()?;
    let mut total = 0.0;
    for (m, params) in state.params.iter().enumerate() {
        total += segment_log_lik(series, &state.segmentation, m + 1, params, state.dispersion)?;
    }
    Ok(total)
}
