//! Random-walk Metropolis–Hastings sampler for a fixed segment count.
//!
//! Each sweep performs one indicator update (a mixture of local swap, shift,
//! and global swap kernels, all symmetric), one log-scale random-walk update
//! per parameter per segment, and one dispersion update. Segment parameters
//! keep their ordinal association when change points move: Θ_m always
//! belongs to the m-th segment from the left, whatever its boundaries.

use rand::Rng;

use crate::error::{Error, Result};
use crate::params::{ModelState, PriorSpec, SamplerConfig};
use crate::segmentation::{free_window, Segmentation};
use crate::series::EpidemicSeries;
use crate::trace::ChainTrace;

use super::engine::{Engine, EngineOutcome, Proposal};
use super::{MoveOutcome, ParamKind};

/// Builds the public record of a step. The engine has already resolved the
/// move, so patching the proposal onto the current state reproduces the
/// proposed state whether or not it was accepted.
pub(crate) fn materialize(engine: &Engine, outcome: EngineOutcome) -> MoveOutcome {
    let mut state = engine.current_state();
    match &outcome.proposal {
        Proposal::Indicator(cps) => {
            state.segmentation = engine.segmentation_from(cps);
        }
        Proposal::Param { segment, kind, value } => {
            let theta = &mut state.params[*segment];
            match kind {
                ParamKind::Lambda => theta.growth_rate = *value,
                ParamKind::K => theta.final_size = *value,
                ParamKind::P => theta.scaling = *value,
            }
        }
        Proposal::Dispersion(phi) => state.dispersion = *phi,
    }
    MoveOutcome {
        proposed_state: state,
        log_hastings: outcome.log_hastings,
        accepted: outcome.accepted,
        move_kind: outcome.kind,
    }
}

fn interior(segmentation: &Segmentation) -> Vec<usize> {
    segmentation
        .changepoints()
        .into_iter()
        .filter(|&t| t > 0)
        .map(|t| t as usize)
        .collect()
}

/// Proposes moving one uniformly chosen interior change point one position
/// left or right (direction uniform). Gap violations in the result are left
/// for the prior to reject. Degenerate targets (position 0, past the end, or
/// already occupied, reachable only with a minimum gap below 2) return the
/// input unchanged.
pub fn propose_local_swap(
    segmentation: &Segmentation,
    rng: &mut impl Rng,
) -> Result<Segmentation> {
    let cps = interior(segmentation);
    if cps.is_empty() {
        return Err(Error::NoFreeChangePoint);
    }
    let t = cps[rng.gen_range(0..cps.len())];
    let target = if rng.gen_range(0..2) == 1 { t + 1 } else { t - 1 };
    let mut indicator = segmentation.indicator().to_vec();
    if target == 0 || target >= indicator.len() || indicator[target] == 1 {
        return Segmentation::new(indicator);
    }
    indicator[t] = 0;
    indicator[target] = 1;
    Segmentation::new(indicator)
}

/// Proposes moving one uniformly chosen interior change point to a uniformly
/// chosen empty position of the free window. Preserves the segment count.
pub fn propose_global_swap(
    segmentation: &Segmentation,
    q_gap: usize,
    rng: &mut impl Rng,
) -> Result<Segmentation> {
    let cps = interior(segmentation);
    if cps.is_empty() {
        return Err(Error::NoFreeChangePoint);
    }
    let empties: Vec<usize> = match free_window(segmentation.len(), q_gap) {
        Some((lo, hi)) => (lo..=hi).filter(|&t| segmentation.indicator()[t] == 0).collect(),
        None => Vec::new(),
    };
    if empties.is_empty() {
        return Err(Error::NoFreeChangePoint);
    }
    let from = cps[rng.gen_range(0..cps.len())];
    let to = empties[rng.gen_range(0..empties.len())];
    let mut indicator = segmentation.indicator().to_vec();
    indicator[from] = 0;
    indicator[to] = 1;
    Segmentation::new(indicator)
}

/// Proposes shifting every interior change point by one position, all in
/// the same uniformly chosen direction. Boundary collisions are represented
/// as merged change points and rejected by the prior.
pub fn propose_shift(segmentation: &Segmentation, rng: &mut impl Rng) -> Result<Segmentation> {
    let cps = interior(segmentation);
    if cps.is_empty() {
        return Err(Error::NoFreeChangePoint);
    }
    let rightward = rng.gen_range(0..2) == 1;
    let mut indicator = vec![0u8; segmentation.len()];
    indicator[0] = 1;
    for &t in &cps {
        let target = if rightward { t + 1 } else { t - 1 };
        if target < indicator.len() {
            indicator[target] = 1;
        }
    }
    Segmentation::new(indicator)
}

/// One Metropolis step on the indicator: local swap with probability 0.4,
/// shift with 0.4, global swap with 0.2. Errs with
/// [`Error::NoFreeChangePoint`] for single-segment states, where the caller
/// falls back to parameter moves.
pub fn mh_update_indicator(
    series: &EpidemicSeries,
    state: &ModelState,
    prior: &PriorSpec,
    rng: &mut impl Rng,
) -> Result<MoveOutcome> {
    let config = SamplerConfig::default();
    let mut engine = Engine::from_state(series, prior, &config, state)?;
    let outcome = engine.move_indicator_mixture(rng)?;
    Ok(materialize(&engine, outcome))
}

/// One Metropolis step on a single parameter of 1-based segment
/// `segment_index`.
pub fn mh_update_segment_param(
    series: &EpidemicSeries,
    state: &ModelState,
    segment_index: usize,
    param_kind: ParamKind,
    prior: &PriorSpec,
    config: &SamplerConfig,
    rng: &mut impl Rng,
) -> Result<MoveOutcome> {
    if segment_index == 0 || segment_index > state.segmentation.segment_count() {
        return Err(Error::Invalid(format!(
            "segment index {segment_index} out of range 1..={}",
            state.segmentation.segment_count()
        )));
    }
    let mut engine = Engine::from_state(series, prior, config, state)?;
    let outcome = engine.move_segment_param(segment_index - 1, param_kind, rng);
    Ok(materialize(&engine, outcome))
}

/// One Metropolis step on the shared dispersion.
pub fn mh_update_dispersion(
    series: &EpidemicSeries,
    state: &ModelState,
    prior: &PriorSpec,
    config: &SamplerConfig,
    rng: &mut impl Rng,
) -> Result<MoveOutcome> {
    let mut engine = Engine::from_state(series, prior, config, state)?;
    let outcome = engine.move_dispersion(rng);
    Ok(materialize(&engine, outcome))
}

/// Runs a full chain with `m` segments and returns the post-burn-in trace.
///
/// Starts from equally spaced change points and default parameters, then
/// performs `total_iterations` sweeps of indicator update, per-segment
/// parameter updates, and dispersion update.
pub fn run_fixed_chain(
    series: &EpidemicSeries,
    m: usize,
    prior: &PriorSpec,
    config: &SamplerConfig,
    rng: &mut impl Rng,
) -> Result<ChainTrace> {
    let (cps, params, dispersion) = Engine::initial_state(series, prior, m)?;
    let mut engine = Engine::new(series, prior, config, cps, params, dispersion, true)?;
    let mut samples = Vec::with_capacity(config.retained());
    for iteration in 0..config.total_iterations {
        if engine.m() >= 2 {
            engine.move_indicator_mixture(rng).expect("multi-segment state has movable points");
        }
        engine.sweep_params(rng);
        engine.move_dispersion(rng);
        if iteration >= config.burn_in {
            samples.push(engine.record(0.0));
        }
    }
    Ok(ChainTrace { series_len: series.len(), samples })
}
