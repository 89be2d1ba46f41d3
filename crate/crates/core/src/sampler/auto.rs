//! Reversible-jump sampler treating the segment count as unknown.
//!
//! On top of the fixed-dimension kernels this adds birth moves (insert a
//! change point, splitting a segment) and death moves (delete one, merging
//! two). A birth keeps the left part's parameters and draws the right
//! part's from truncated normals centered at them; a death is the exact
//! inverse: it deletes the right segment's parameters outright, the merged
//! segment keeping the left's, and its ratio carries the density a reverse
//! birth would have of re-proposing exactly the deleted values. The
//! Hastings ratio combines the posterior ratio, the segment count prior,
//! the change of indicator normalization, the move selection
//! probabilities, the position choice probabilities, and the parameter
//! proposal density; each pair of birth and death ratios is a term-level
//! mirror, which is what keeps the segment-count marginal exact.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelState, PriorSpec, SamplerConfig, SegmentParams};
use crate::prior::{bern_log_mass, log_indicator_partitions, log_prior_segment_count};
use crate::series::EpidemicSeries;
use crate::stats::{std_normal_ln_pdf, trunc_normal_draw, trunc_normal_ln_pdf};
use crate::trace::ChainTrace;

use super::engine::Engine;
use super::{MoveKind, MoveOutcome};

/// Move families of the trans-dimensional sampler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RjMoveKind {
    Birth,
    Death,
    LocalSwap,
    GlobalSwap,
    Stay,
}

/// Test and experiment hooks for [`run_auto_chain_with_options`].
#[derive(Clone, Copy, Debug, Default)]
pub struct AutoOptions {
    /// Replaces the likelihood with a constant so the chain targets the
    /// prior alone; used to validate the trans-dimensional kernel against
    /// the known segment-count marginal.
    pub disable_likelihood: bool,
    /// Uses the nominal position counts T−M (birth) and M−1 (death) in the
    /// Hastings ratio instead of the exact feasible-set sizes, which the
    /// nominal counts overstate when the gap rule excludes positions.
    pub approx_count_ratios: bool,
}

/// Draws a move kind. Trans-dimensional moves have probability 1/4 each and
/// the fixed-dimensional ones 1/6 each; at the boundaries the blocked
/// trans-dimensional move's mass goes to its partner (birth 1/2 at m=1,
/// death 1/2 at m=m_max). When m_max is 1 both are blocked and the three
/// fixed kinds split the mass evenly.
pub fn select_move(m: usize, m_max: usize, rng: &mut impl Rng) -> RjMoveKind {
    let (pb, pd) = if m_max <= 1 {
        (0.0, 0.0)
    } else if m <= 1 {
        (0.5, 0.0)
    } else if m >= m_max {
        (0.0, 0.5)
    } else {
        (0.25, 0.25)
    };
    let rest = (1.0 - pb - pd) / 3.0;
    let u: f64 = rng.gen();
    if u < pb {
        RjMoveKind::Birth
    } else if u < pb + pd {
        RjMoveKind::Death
    } else if u < pb + pd + rest {
        RjMoveKind::LocalSwap
    } else if u < pb + pd + 2.0 * rest {
        RjMoveKind::GlobalSwap
    } else {
        RjMoveKind::Stay
    }
}

/// Quantities shared by every trans-dimensional step of one chain: the
/// indicator normalization and segment-count prior per reachable m, and the
/// structural ceiling on m.
struct AutoContext {
    ln_z: Vec<f64>,
    ln_tpoi: Vec<f64>,
    eff_m_max: usize,
    opts: AutoOptions,
}

impl AutoContext {
    fn new(series: &EpidemicSeries, prior: &PriorSpec, opts: AutoOptions) -> Self {
        let eff_m_max = prior.effective_m_max(series.len());
        let ln_z = log_indicator_partitions(series.len(), prior, eff_m_max);
        let mut ln_tpoi = vec![f64::NEG_INFINITY; eff_m_max + 1];
        for (m, slot) in ln_tpoi.iter_mut().enumerate().skip(1) {
            *slot = log_prior_segment_count(m, prior);
        }
        AutoContext { ln_z, ln_tpoi, eff_m_max, opts }
    }

    /// ln of the probability that a birth is attempted from m segments.
    fn ln_pb(&self, m: usize) -> f64 {
        if self.eff_m_max <= 1 || m >= self.eff_m_max {
            f64::NEG_INFINITY
        } else if m <= 1 {
            0.5f64.ln()
        } else {
            0.25f64.ln()
        }
    }

    /// ln of the probability that a death is attempted from m segments.
    fn ln_pd(&self, m: usize) -> f64 {
        if m <= 1 {
            f64::NEG_INFINITY
        } else if m >= self.eff_m_max {
            0.5f64.ln()
        } else {
            0.25f64.ln()
        }
    }
}

/// Draws new segment parameters on the log scale around `center`: λ from a
/// plain normal, K from a normal truncated to the segment's support, p from
/// a normal truncated to (−∞, 0]. Exponentiation can overshoot a bound by
/// an ulp, so results are clamped back into the parameter space.
fn draw_theta(
    engine: &Engine,
    center: &SegmentParams,
    ln_k_lo: f64,
    rng: &mut impl Rng,
) -> SegmentParams {
    let config = engine.config;
    let z: f64 = rng.sample(StandardNormal);
    let growth_rate = (center.growth_rate.ln() + config.step_lambda * z).exp();
    let ln_k =
        trunc_normal_draw(rng, center.final_size.ln(), config.step_k, ln_k_lo, engine.ln_k_hi());
    let final_size = ln_k.exp().min(engine.k_hi());
    let ln_p = trunc_normal_draw(rng, center.scaling.ln(), config.step_p, f64::NEG_INFINITY, 0.0);
    let scaling = ln_p.exp().min(1.0);
    SegmentParams { final_size, growth_rate, scaling }
}

/// ln density of [`draw_theta`] at `theta`, over the (λ, K, p) space (the
/// log-scale Jacobian is folded in). Birth and death evaluate this same
/// function for both proposal directions, which keeps their ratios exact
/// mirror images.
fn theta_proposal_ln_pdf(
    engine: &Engine,
    theta: &SegmentParams,
    center: &SegmentParams,
    ln_k_lo: f64,
) -> f64 {
    let config = engine.config;
    let z = (theta.growth_rate.ln() - center.growth_rate.ln()) / config.step_lambda;
    std_normal_ln_pdf(z) - config.step_lambda.ln() - theta.growth_rate.ln()
        + trunc_normal_ln_pdf(
            theta.final_size.ln(),
            center.final_size.ln(),
            config.step_k,
            ln_k_lo,
            engine.ln_k_hi(),
        )
        - theta.final_size.ln()
        + trunc_normal_ln_pdf(
            theta.scaling.ln(),
            center.scaling.ln(),
            config.step_p,
            f64::NEG_INFINITY,
            0.0,
        )
        - theta.scaling.ln()
}

/// A fully evaluated trans-dimensional proposal.
struct TransMove {
    cps: Vec<usize>,
    params: Vec<SegmentParams>,
    seg_lik: Vec<f64>,
    seg_prior: Vec<f64>,
    lp_indicator: f64,
    log_hastings: f64,
}

/// Public record of a resolved trans-dimensional step.
struct TransOutcome {
    cps: Vec<usize>,
    params: Vec<SegmentParams>,
    log_hastings: f64,
    accepted: bool,
}

/// Evaluates a birth at free position `t_star` with right-part parameters
/// `theta_star`; `n_b` is the size of the feasible insertion set the
/// position was drawn from.
fn birth_ratio(
    engine: &Engine,
    ctx: &AutoContext,
    t_star: usize,
    n_b: usize,
    theta_star: SegmentParams,
) -> TransMove {
    let m = engine.m();
    let j = engine.cps.partition_point(|&c| c < t_star) - 1;
    let mut cps = engine.cps.clone();
    cps.insert(j + 1, t_star);
    let mut params = engine.params.clone();
    params.insert(j + 1, theta_star);
    let (seg_lik, seg_prior) = engine.eval_candidate(&cps, &params);
    let lp_indicator = bern_log_mass(engine.series.len(), &cps, engine.prior);
    // The split segment's last point lands in the right part, so the right
    // part's maximum count equals the whole segment's; these are the K
    // bounds of the proposal for the new segment.
    let ln_k_lo = (engine.seg_max_c(&engine.cps, j) as f64).ln();
    let position_ratio = if ctx.opts.approx_count_ratios {
        ((engine.series.len() - m) as f64).ln() - (m as f64).ln()
    } else {
        (n_b as f64).ln() - (m as f64).ln()
    };
    let log_hastings = (seg_lik.iter().sum::<f64>() - engine.total_log_lik())
        + (lp_indicator - engine.lp_indicator)
        - (ctx.ln_z[m + 1] - ctx.ln_z[m])
        + (ctx.ln_tpoi[m + 1] - ctx.ln_tpoi[m])
        + (seg_prior.iter().sum::<f64>() - engine.total_seg_prior())
        + (ctx.ln_pd(m + 1) - ctx.ln_pb(m))
        + position_ratio
        - theta_proposal_ln_pdf(engine, &theta_star, &engine.params[j], ln_k_lo);
    TransMove { cps, params, seg_lik, seg_prior, lp_indicator, log_hastings }
}

/// Evaluates a death that removes interior change point `choice` (0-based
/// among the m−1 deletable points). The right segment's parameters are
/// deleted and the merged segment keeps the left segment's, so the move is
/// the exact inverse of a birth at the same position; the ratio's density
/// term is the reverse birth's chance of re-proposing the deleted values.
fn death_ratio(engine: &Engine, ctx: &AutoContext, choice: usize) -> TransMove {
    let m = engine.m();
    let idx = choice + 1;
    let removed_theta = engine.params[idx];
    let mut cps = engine.cps.clone();
    cps.remove(idx);
    let mut params = engine.params.clone();
    params.remove(idx);
    let (seg_lik, seg_prior) = engine.eval_candidate(&cps, &params);
    let lp_indicator = bern_log_mass(engine.series.len(), &cps, engine.prior);
    // The removed right segment ends where the merged segment ends, so its
    // maximum count doubles as the merged segment's. These are the K
    // bounds a reverse birth would use.
    let ln_k_lo = (engine.seg_max_c(&engine.cps, idx) as f64).ln();
    let position_ratio = if ctx.opts.approx_count_ratios {
        ((m - 1) as f64).ln() - ((engine.series.len() - m + 1) as f64).ln()
    } else {
        let n_b_rev = engine.feasible_insertions(&cps).len();
        ((m - 1) as f64).ln() - (n_b_rev as f64).ln()
    };
    let log_hastings = (seg_lik.iter().sum::<f64>() - engine.total_log_lik())
        + (lp_indicator - engine.lp_indicator)
        - (ctx.ln_z[m - 1] - ctx.ln_z[m])
        + (ctx.ln_tpoi[m - 1] - ctx.ln_tpoi[m])
        + (seg_prior.iter().sum::<f64>() - engine.total_seg_prior())
        + (ctx.ln_pb(m - 1) - ctx.ln_pd(m))
        + position_ratio
        + theta_proposal_ln_pdf(engine, &removed_theta, &params[idx - 1], ln_k_lo);
    TransMove { cps, params, seg_lik, seg_prior, lp_indicator, log_hastings }
}

/// Runs one birth step. `None` means no feasible insertion exists (or the
/// segment count is at its ceiling) and the caller should fall back to a
/// stay move.
fn birth_inner(
    engine: &mut Engine,
    ctx: &AutoContext,
    rng: &mut impl Rng,
) -> Option<TransOutcome> {
    if engine.m() >= ctx.eff_m_max {
        return None;
    }
    let feasible = engine.feasible_insertions(&engine.cps);
    if feasible.is_empty() {
        return None;
    }
    let t_star = feasible[rng.gen_range(0..feasible.len())];
    let j = engine.cps.partition_point(|&c| c < t_star) - 1;
    let ln_k_lo = (engine.seg_max_c(&engine.cps, j) as f64).ln();
    let center = engine.params[j];
    let theta_star = draw_theta(engine, &center, ln_k_lo, rng);
    let mv = birth_ratio(engine, ctx, t_star, feasible.len(), theta_star);
    let accepted = engine.accept(rng, mv.log_hastings);
    let outcome = TransOutcome {
        cps: mv.cps.clone(),
        params: mv.params.clone(),
        log_hastings: mv.log_hastings,
        accepted,
    };
    if accepted {
        engine.install(mv.cps, mv.params, mv.seg_lik, mv.seg_prior, mv.lp_indicator);
    }
    Some(outcome)
}

/// Runs one death step; the caller guarantees at least two segments.
fn death_inner(engine: &mut Engine, ctx: &AutoContext, rng: &mut impl Rng) -> TransOutcome {
    let choice = rng.gen_range(0..engine.m() - 1);
    let mv = death_ratio(engine, ctx, choice);
    let accepted = engine.accept(rng, mv.log_hastings);
    let outcome = TransOutcome {
        cps: mv.cps.clone(),
        params: mv.params.clone(),
        log_hastings: mv.log_hastings,
        accepted,
    };
    if accepted {
        engine.install(mv.cps, mv.params, mv.seg_lik, mv.seg_prior, mv.lp_indicator);
    }
    outcome
}

fn materialize_trans(engine: &Engine, outcome: TransOutcome, kind: MoveKind) -> MoveOutcome {
    MoveOutcome {
        proposed_state: ModelState {
            segmentation: engine.segmentation_from(&outcome.cps),
            params: outcome.params,
            dispersion: engine.dispersion,
        },
        log_hastings: outcome.log_hastings,
        accepted: outcome.accepted,
        move_kind: kind,
    }
}

/// One birth step from `state`: inserts a change point at a uniformly drawn
/// feasible position and proposes parameters for the new right part.
pub fn birth_move(
    series: &EpidemicSeries,
    state: &ModelState,
    prior: &PriorSpec,
    config: &SamplerConfig,
    rng: &mut impl Rng,
) -> Result<MoveOutcome> {
    let mut engine = Engine::from_state(series, prior, config, state)?;
    let ctx = AutoContext::new(series, prior, AutoOptions::default());
    match birth_inner(&mut engine, &ctx, rng) {
        Some(outcome) => Ok(materialize_trans(&engine, outcome, MoveKind::Birth)),
        None => Err(Error::Infeasible(
            "no feasible insertion position for a birth move".into(),
        )),
    }
}

/// One death step from `state`: removes a uniformly drawn interior change
/// point, merging its segment into the left neighbor, which keeps its
/// parameters.
pub fn death_move(
    series: &EpidemicSeries,
    state: &ModelState,
    prior: &PriorSpec,
    config: &SamplerConfig,
    rng: &mut impl Rng,
) -> Result<MoveOutcome> {
    if state.segmentation.segment_count() < 2 {
        return Err(Error::NoFreeChangePoint);
    }
    let mut engine = Engine::from_state(series, prior, config, state)?;
    let ctx = AutoContext::new(series, prior, AutoOptions::default());
    let outcome = death_inner(&mut engine, &ctx, rng);
    Ok(materialize_trans(&engine, outcome, MoveKind::Death))
}

/// Runs a chain with an unknown segment count and returns the post-burn-in
/// trace.
///
/// Starts from a single segment. Each iteration draws a move kind: birth
/// and death perform one trans-dimensional step; local and global swaps
/// move a change point and then sweep the parameters; stay sweeps the
/// parameters only. Every iteration ends with a dispersion update. Stored
/// log-posteriors include the segment-count prior and the indicator
/// normalization, so they are comparable across dimensions.
pub fn run_auto_chain(
    series: &EpidemicSeries,
    prior: &PriorSpec,
    config: &SamplerConfig,
    rng: &mut impl Rng,
) -> Result<ChainTrace> {
    run_auto_chain_with_options(series, prior, config, AutoOptions::default(), rng)
}

/// [`run_auto_chain`] with test and experiment hooks exposed.
pub fn run_auto_chain_with_options(
    series: &EpidemicSeries,
    prior: &PriorSpec,
    config: &SamplerConfig,
    options: AutoOptions,
    rng: &mut impl Rng,
) -> Result<ChainTrace> {
    let (cps, params, dispersion) = Engine::initial_state(series, prior, 1)?;
    let mut engine = Engine::new(
        series,
        prior,
        config,
        cps,
        params,
        dispersion,
        !options.disable_likelihood,
    )?;
    let ctx = AutoContext::new(series, prior, options);
    if ctx.eff_m_max > 1 {
        for (name, value) in [
            ("step_lambda", config.step_lambda),
            ("step_k", config.step_k),
            ("step_p", config.step_p),
        ] {
            if value <= 0.0 {
                return Err(Error::Invalid(format!(
                    "{name} must be positive for trans-dimensional sampling"
                )));
            }
        }
    }
    let mut samples = Vec::with_capacity(config.retained());
    for iteration in 0..config.total_iterations {
        match select_move(engine.m(), ctx.eff_m_max, rng) {
            RjMoveKind::Birth => {
                if birth_inner(&mut engine, &ctx, rng).is_none() {
                    engine.sweep_params(rng);
                }
            }
            RjMoveKind::Death => {
                death_inner(&mut engine, &ctx, rng);
            }
            RjMoveKind::LocalSwap => {
                // A single-segment state has nothing to swap; keep the
                // parameter sweep so the iteration still moves.
                let _ = engine.move_local_swap(rng);
                engine.sweep_params(rng);
            }
            RjMoveKind::GlobalSwap => {
                let _ = engine.move_global_swap(rng);
                engine.sweep_params(rng);
            }
            RjMoveKind::Stay => engine.sweep_params(rng),
        }
        engine.move_dispersion(rng);
        let m = engine.m();
        assert!(
            engine.params.len() == m && (1..=ctx.eff_m_max).contains(&m),
            "dimension bookkeeping violated: {} parameter sets for {} segments (ceiling {})",
            engine.params.len(),
            m,
            ctx.eff_m_max,
        );
        if iteration >= config.burn_in {
            samples.push(engine.record(ctx.ln_tpoi[m] - ctx.ln_z[m]));
        }
    }
    Ok(ChainTrace { series_len: series.len(), samples })
}
