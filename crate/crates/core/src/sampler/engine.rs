//! Shared Metropolis–Hastings engine.
//!
//! Owns the current chain state together with cached log-density pieces:
//! per-segment likelihood contributions, per-segment parameter priors, the
//! indicator prior, and the dispersion prior. Every move evaluates only the
//! pieces its proposal can change and installs them on acceptance, so the
//! cached values always equal a fresh evaluation of the current state.
//!
//! Acceptance draws exactly one uniform per Metropolis step regardless of
//! the ratio, which keeps RNG consumption independent of the accept branch
//! and makes seeded runs reproducible across refactorings.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::likelihood::{glc_mean, nb_log_pmf_cached};
use crate::params::{ModelState, PriorSpec, SamplerConfig, SegmentParams, DISPERSION_MAX};
use crate::prior::{bern_log_mass, log_prior_dispersion, log_prior_segment_params};
use crate::segmentation::{free_window, Segmentation};
use crate::series::EpidemicSeries;
use crate::stats::{ln_gamma, trunc_normal_draw, trunc_normal_ln_pdf};
use crate::trace::TraceSample;

use super::{MoveKind, ParamKind};

/// What a move put forward; enough to materialize the proposed state.
#[derive(Clone, Debug)]
pub(crate) enum Proposal {
    /// Proposed change-point positions. May be structurally broken (out of
    /// range or colliding) for boundary shift proposals; such proposals are
    /// always rejected.
    Indicator(Vec<usize>),
    /// New value for one parameter of one 0-based segment.
    Param { segment: usize, kind: ParamKind, value: f64 },
    Dispersion(f64),
}

/// Result of one internal Metropolis step.
#[derive(Clone, Debug)]
pub(crate) struct EngineOutcome {
    pub kind: MoveKind,
    pub log_hastings: f64,
    pub accepted: bool,
    pub proposal: Proposal,
}

pub(crate) struct Engine<'a> {
    pub series: &'a EpidemicSeries,
    pub prior: &'a PriorSpec,
    pub config: &'a SamplerConfig,
    /// Test hook: with the likelihood disabled every data term is 0 and the
    /// chain samples the prior alone.
    pub use_likelihood: bool,
    ln_fact_y: Vec<f64>,
    k_hi: f64,
    ln_k_hi: f64,
    // Current state.
    pub cps: Vec<usize>,
    pub params: Vec<SegmentParams>,
    pub dispersion: f64,
    ln_gamma_phi: f64,
    // Cached log-density pieces of the current state.
    pub seg_lik: Vec<f64>,
    pub seg_prior: Vec<f64>,
    pub lp_indicator: f64,
    pub lp_phi: f64,
}

impl<'a> Engine<'a> {
    pub fn new(
        series: &'a EpidemicSeries,
        prior: &'a PriorSpec,
        config: &'a SamplerConfig,
        cps: Vec<usize>,
        params: Vec<SegmentParams>,
        dispersion: f64,
        use_likelihood: bool,
    ) -> Result<Self> {
        prior.validate()?;
        config.validate()?;
        if cps.first() != Some(&0) {
            return Err(Error::Invalid("change-point list must start at 0".into()));
        }
        if cps.windows(2).any(|w| w[1] <= w[0]) || cps.last().copied().unwrap_or(0) >= series.len()
        {
            return Err(Error::Invalid(
                "change points must be strictly increasing and in range".into(),
            ));
        }
        if params.len() != cps.len() {
            return Err(Error::Invalid(format!(
                "{} parameter triples for {} segments",
                params.len(),
                cps.len()
            )));
        }
        for p in &params {
            p.validate()?;
        }
        if !(dispersion > 0.0 && dispersion <= DISPERSION_MAX) {
            return Err(Error::Domain(format!(
                "dispersion {dispersion} outside (0, {DISPERSION_MAX}]"
            )));
        }
        let ln_fact_y =
            series.new_cases().iter().map(|&y| ln_gamma(y as f64 + 1.0)).collect::<Vec<_>>();
        let k_hi = prior.k_upper(series.population());
        let mut engine = Engine {
            series,
            prior,
            config,
            use_likelihood,
            ln_fact_y,
            k_hi,
            ln_k_hi: k_hi.ln(),
            cps,
            params,
            dispersion,
            ln_gamma_phi: ln_gamma(dispersion),
            seg_lik: Vec::new(),
            seg_prior: Vec::new(),
            lp_indicator: 0.0,
            lp_phi: 0.0,
        };
        engine.lp_indicator = bern_log_mass(series.len(), &engine.cps, prior);
        if engine.lp_indicator == f64::NEG_INFINITY {
            return Err(Error::Infeasible(
                "initial segmentation violates the minimum-gap rule".into(),
            ));
        }
        engine.lp_phi = log_prior_dispersion(dispersion, prior);
        let (lik, pri) =
            engine.eval_segments(&engine.cps, &engine.params, dispersion, engine.ln_gamma_phi);
        if pri.iter().any(|v| *v == f64::NEG_INFINITY) {
            return Err(Error::Infeasible(
                "initial segment parameters have zero prior density; check that \
                 rho times the population exceeds the final cumulative count"
                    .into(),
            ));
        }
        engine.seg_lik = lik;
        engine.seg_prior = pri;
        Ok(engine)
    }

    pub fn from_state(
        series: &'a EpidemicSeries,
        prior: &'a PriorSpec,
        config: &'a SamplerConfig,
        state: &ModelState,
    ) -> Result<Self> {
        if state.segmentation.len() != series.len() {
            return Err(Error::LengthMismatch(format!(
                "state over {} time points for a series of {}",
                state.segmentation.len(),
                series.len()
            )));
        }
        Engine::new(
            series,
            prior,
            config,
            state.segmentation.changepoints().iter().map(|&c| c as usize).collect(),
            state.params.clone(),
            state.dispersion,
            true,
        )
    }

    /// Default starting state for a chain with `m` segments: change points
    /// at multiples of ⌊T/m⌋ (equally spaced, automatically satisfying the
    /// gap rule when mQ ≤ T), growth parameters in a regime typical for
    /// epidemic counts (λ = 0.1, p = 0.9), each K at the midpoint of its
    /// support, and an overdispersed φ = 1.
    pub fn initial_state(
        series: &EpidemicSeries,
        prior: &PriorSpec,
        m: usize,
    ) -> Result<(Vec<usize>, Vec<SegmentParams>, f64)> {
        if m == 0 {
            return Err(Error::Invalid("segment count must be at least 1".into()));
        }
        if m * prior.q_gap > series.len() {
            return Err(Error::Infeasible(format!(
                "{m} segments of at least {} points do not fit into {} time points",
                prior.q_gap,
                series.len()
            )));
        }
        let spacing = series.len() / m;
        let cps: Vec<usize> = (0..m).map(|i| i * spacing).collect();
        let k_hi = prior.k_upper(series.population());
        let mut params = Vec::with_capacity(m);
        for i in 0..m {
            let end = cps.get(i + 1).copied().unwrap_or(series.len());
            let k_lo = series.cumulative()[end - 1] as f64;
            if k_lo >= k_hi {
                return Err(Error::Infeasible(format!(
                    "segment {} reaches {} cases but the final-size prior is capped at {}; \
                     increase rho or the population",
                    i + 1,
                    k_lo,
                    k_hi
                )));
            }
            params.push(SegmentParams {
                final_size: (k_lo + k_hi) / 2.0,
                growth_rate: 0.1,
                scaling: 0.9,
            });
        }
        Ok((cps, params, 1.0))
    }

    pub fn m(&self) -> usize {
        self.cps.len()
    }

    pub fn total_log_lik(&self) -> f64 {
        self.seg_lik.iter().sum()
    }

    pub fn total_seg_prior(&self) -> f64 {
        self.seg_prior.iter().sum()
    }

    pub fn k_hi(&self) -> f64 {
        self.k_hi
    }

    pub fn ln_k_hi(&self) -> f64 {
        self.ln_k_hi
    }

    fn seg_end(&self, cps: &[usize], i: usize) -> usize {
        cps.get(i + 1).copied().unwrap_or(self.series.len())
    }

    /// Largest cumulative count within 0-based segment i of `cps`.
    pub fn seg_max_c(&self, cps: &[usize], i: usize) -> u64 {
        self.series.cumulative()[self.seg_end(cps, i) - 1]
    }

    /// Log-likelihood of the half-open time range [start, end) under one
    /// parameter triple; 0 when the likelihood hook is off.
    fn range_log_lik(
        &self,
        start: usize,
        end: usize,
        params: &SegmentParams,
        dispersion: f64,
        ln_gamma_disp: f64,
    ) -> f64 {
        if !self.use_likelihood {
            return 0.0;
        }
        let mut total = 0.0;
        for t in start..end {
            let mean = glc_mean(self.series.prev_cumulative(t), params);
            total += nb_log_pmf_cached(
                self.series.new_cases()[t],
                mean,
                dispersion,
                ln_gamma_disp,
                self.ln_fact_y[t],
            );
        }
        total
    }

    fn seg_log_prior(&self, cps: &[usize], i: usize, params: &SegmentParams) -> f64 {
        log_prior_segment_params(
            params,
            self.seg_max_c(cps, i),
            self.prior,
            self.series.population(),
        )
    }

    /// Per-segment likelihood and prior arrays for an arbitrary candidate
    /// configuration.
    fn eval_segments(
        &self,
        cps: &[usize],
        params: &[SegmentParams],
        dispersion: f64,
        ln_gamma_disp: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let mut lik = Vec::with_capacity(cps.len());
        let mut pri = Vec::with_capacity(cps.len());
        for i in 0..cps.len() {
            let end = self.seg_end(cps, i);
            lik.push(self.range_log_lik(cps[i], end, &params[i], dispersion, ln_gamma_disp));
            pri.push(self.seg_log_prior(cps, i, &params[i]));
        }
        (lik, pri)
    }

    /// Evaluates a candidate configuration at the current dispersion.
    pub fn eval_candidate(&self, cps: &[usize], params: &[SegmentParams]) -> (Vec<f64>, Vec<f64>) {
        self.eval_segments(cps, params, self.dispersion, self.ln_gamma_phi)
    }

    /// One uniform per step, drawn unconditionally.
    pub fn accept(&self, rng: &mut impl Rng, log_hastings: f64) -> bool {
        let u: f64 = rng.gen();
        log_hastings >= 0.0 || u.ln() < log_hastings
    }

    /// Materializes the current state.
    pub fn current_state(&self) -> ModelState {
        ModelState {
            segmentation: self.segmentation_from(&self.cps),
            params: self.params.clone(),
            dispersion: self.dispersion,
        }
    }

    /// Builds a segmentation from a possibly broken position list: colliding
    /// positions merge and out-of-range positions are dropped. Only rejected
    /// diagnostic records can carry such lists.
    pub fn segmentation_from(&self, cps: &[usize]) -> Segmentation {
        let mut indicator = vec![0u8; self.series.len()];
        indicator[0] = 1;
        for &t in cps {
            if t < indicator.len() {
                indicator[t] = 1;
            }
        }
        Segmentation::new(indicator).expect("first entry is set")
    }

    /// Snapshot of the current state for the trace. `extra_log_prior` is
    /// added into the recorded log-posterior; variable-M chains pass their
    /// segment-count prior and indicator normalizer through it.
    pub fn record(&self, extra_log_prior: f64) -> TraceSample {
        let log_lik = self.total_log_lik();
        TraceSample {
            changepoints: self.cps.iter().map(|&t| t as u32).collect(),
            params: self.params.clone(),
            dispersion: self.dispersion,
            log_lik,
            log_prior_indicator: self.lp_indicator,
            log_posterior: log_lik
                + self.lp_indicator
                + self.total_seg_prior()
                + self.lp_phi
                + extra_log_prior,
        }
    }

    /// Replaces the whole configuration after an accepted trans-dimensional
    /// move; the caller supplies freshly evaluated caches.
    pub fn install(
        &mut self,
        cps: Vec<usize>,
        params: Vec<SegmentParams>,
        seg_lik: Vec<f64>,
        seg_prior: Vec<f64>,
        lp_indicator: f64,
    ) {
        self.cps = cps;
        self.params = params;
        self.seg_lik = seg_lik;
        self.seg_prior = seg_prior;
        self.lp_indicator = lp_indicator;
    }

    // ----- indicator moves -----

    /// Shared accept/install step for any move that only rearranges change
    /// points at a fixed segment count. The kernels are symmetric, so the
    /// Hastings ratio is the posterior ratio: likelihood, indicator prior,
    /// and the parameter priors. The last enter because each K's support
    /// depends on its segment's maximum count, which boundary moves change;
    /// dropping them would leave the chain targeting a different law than
    /// the one the parameter moves target.
    fn resolve_indicator_move(
        &mut self,
        kind: MoveKind,
        proposed: Vec<usize>,
        rng: &mut impl Rng,
    ) -> EngineOutcome {
        let lp_new = bern_log_mass(self.series.len(), &proposed, self.prior);
        if lp_new == f64::NEG_INFINITY {
            let _: f64 = rng.gen();
            return EngineOutcome {
                kind,
                log_hastings: f64::NEG_INFINITY,
                accepted: false,
                proposal: Proposal::Indicator(proposed),
            };
        }
        let (lik, pri) =
            self.eval_segments(&proposed, &self.params, self.dispersion, self.ln_gamma_phi);
        let log_hastings = (lik.iter().sum::<f64>() - self.total_log_lik())
            + (lp_new - self.lp_indicator)
            + (pri.iter().sum::<f64>() - self.total_seg_prior());
        let accepted = self.accept(rng, log_hastings);
        if accepted {
            self.cps.clone_from(&proposed);
            self.seg_lik = lik;
            self.seg_prior = pri;
            self.lp_indicator = lp_new;
        }
        EngineOutcome { kind, log_hastings, accepted, proposal: Proposal::Indicator(proposed) }
    }

    /// Moves one uniformly chosen interior change point one step left or
    /// right (direction uniform).
    pub fn move_local_swap(&mut self, rng: &mut impl Rng) -> Result<EngineOutcome> {
        if self.m() < 2 {
            return Err(Error::NoFreeChangePoint);
        }
        let i = 1 + rng.gen_range(0..self.m() - 1);
        let rightward = rng.gen_range(0..2) == 1;
        let target = if rightward { self.cps[i] + 1 } else { self.cps[i] - 1 };
        let proposed = self.cps.clone();
        if target == 0 || target >= self.series.len() || proposed.binary_search(&target).is_ok() {
            // Reachable only with a minimum gap of 1: the swap would merge
            // two change points, so reject without touching the state.
            let _: f64 = rng.gen();
            return Ok(EngineOutcome {
                kind: MoveKind::LocalSwap,
                log_hastings: f64::NEG_INFINITY,
                accepted: false,
                proposal: Proposal::Indicator(proposed),
            });
        }
        let mut proposed = proposed;
        proposed[i] = target;
        Ok(self.resolve_indicator_move(MoveKind::LocalSwap, proposed, rng))
    }

    /// Moves one uniformly chosen interior change point to a uniformly
    /// chosen empty free position.
    pub fn move_global_swap(&mut self, rng: &mut impl Rng) -> Result<EngineOutcome> {
        if self.m() < 2 {
            return Err(Error::NoFreeChangePoint);
        }
        let i = 1 + rng.gen_range(0..self.m() - 1);
        let empties = self.empty_free_positions();
        if empties.is_empty() {
            // Every free position is occupied; nothing to swap with.
            let _: f64 = rng.gen();
            return Ok(EngineOutcome {
                kind: MoveKind::GlobalSwap,
                log_hastings: f64::NEG_INFINITY,
                accepted: false,
                proposal: Proposal::Indicator(self.cps.clone()),
            });
        }
        let target = empties[rng.gen_range(0..empties.len())];
        let mut proposed = self.cps.clone();
        proposed.remove(i);
        let at = proposed.partition_point(|&c| c < target);
        proposed.insert(at, target);
        Ok(self.resolve_indicator_move(MoveKind::GlobalSwap, proposed, rng))
    }

    /// Shifts every interior change point by one step, all in the same
    /// uniformly chosen direction.
    pub fn move_shift(&mut self, rng: &mut impl Rng) -> Result<EngineOutcome> {
        if self.m() < 2 {
            return Err(Error::NoFreeChangePoint);
        }
        let rightward = rng.gen_range(0..2) == 1;
        let proposed: Vec<usize> = self
            .cps
            .iter()
            .map(|&t| {
                if t == 0 {
                    0
                } else if rightward {
                    t + 1
                } else {
                    t - 1
                }
            })
            .collect();
        Ok(self.resolve_indicator_move(MoveKind::Shift, proposed, rng))
    }

    /// The fixed-dimension indicator update: local swap with probability
    /// 0.4, shift with 0.4, global swap with 0.2.
    pub fn move_indicator_mixture(&mut self, rng: &mut impl Rng) -> Result<EngineOutcome> {
        if self.m() < 2 {
            return Err(Error::NoFreeChangePoint);
        }
        let u: f64 = rng.gen();
        if u < 0.4 {
            self.move_local_swap(rng)
        } else if u < 0.8 {
            self.move_shift(rng)
        } else {
            self.move_global_swap(rng)
        }
    }

    /// Free-window positions not currently holding a change point.
    pub fn empty_free_positions(&self) -> Vec<usize> {
        let Some((lo, hi)) = free_window(self.series.len(), self.prior.q_gap) else {
            return Vec::new();
        };
        let mut next = self.cps.partition_point(|&c| c < lo);
        let mut out = Vec::new();
        for t in lo..=hi {
            if next < self.cps.len() && self.cps[next] == t {
                next += 1;
            } else {
                out.push(t);
            }
        }
        out
    }

    /// Free-window positions where a new change point could be inserted
    /// without violating the gap rule against any position in `cps`.
    pub fn feasible_insertions(&self, cps: &[usize]) -> Vec<usize> {
        let Some((lo, hi)) = free_window(self.series.len(), self.prior.q_gap) else {
            return Vec::new();
        };
        let q = self.prior.q_gap;
        let mut out = Vec::new();
        for t in lo..=hi {
            let succ = cps.partition_point(|&c| c <= t);
            let pred = cps[succ - 1];
            if t - pred < q {
                continue;
            }
            if let Some(&s) = cps.get(succ) {
                if s - t < q {
                    continue;
                }
            }
            out.push(t);
        }
        out
    }

    // ----- parameter moves -----

    /// Random-walk update of one parameter of 0-based segment `i`, proposed
    /// on the log scale. The Hastings correction carries the log-scale
    /// Jacobian and, for the truncated kinds, the exact ratio of truncation
    /// normalizers.
    pub fn move_segment_param(
        &mut self,
        i: usize,
        kind: ParamKind,
        rng: &mut impl Rng,
    ) -> EngineOutcome {
        let theta = self.params[i];
        let (current, sigma, lo, hi) = match kind {
            ParamKind::Lambda => {
                (theta.growth_rate, self.config.step_lambda, f64::NEG_INFINITY, f64::INFINITY)
            }
            ParamKind::K => {
                let k_lo = self.seg_max_c(&self.cps, i) as f64;
                (theta.final_size, self.config.step_k, k_lo.ln(), self.ln_k_hi)
            }
            ParamKind::P => (theta.scaling, self.config.step_p, f64::NEG_INFINITY, 0.0),
        };
        if sigma == 0.0 {
            // Degenerate kernel: the proposal is the current value.
            let _: f64 = rng.gen();
            return EngineOutcome {
                kind: kind.move_kind(),
                log_hastings: 0.0,
                accepted: true,
                proposal: Proposal::Param { segment: i, kind, value: current },
            };
        }
        let ln_cur = current.max(f64::MIN_POSITIVE).ln();
        let (ln_new, correction) = if let ParamKind::Lambda = kind {
            let z: f64 = rng.sample(StandardNormal);
            let ln_new = ln_cur + sigma * z;
            // Symmetric normal on the log scale: only the Jacobian remains.
            (ln_new, ln_new - ln_cur)
        } else {
            let ln_new = trunc_normal_draw(rng, ln_cur, sigma, lo, hi);
            let fwd = trunc_normal_ln_pdf(ln_new, ln_cur, sigma, lo, hi);
            let rev = trunc_normal_ln_pdf(ln_cur, ln_new, sigma, lo, hi);
            (ln_new, rev - fwd + (ln_new - ln_cur))
        };
        let value = match kind {
            ParamKind::Lambda => ln_new.exp(),
            // Exponentiation can overshoot the bound by an ulp; clamp back
            // into the prior support.
            ParamKind::K => ln_new.exp().min(self.k_hi),
            ParamKind::P => ln_new.exp().min(1.0),
        };
        let mut proposed = theta;
        match kind {
            ParamKind::Lambda => proposed.growth_rate = value,
            ParamKind::K => proposed.final_size = value,
            ParamKind::P => proposed.scaling = value,
        }
        let (start, end) = (self.cps[i], self.seg_end(&self.cps, i));
        let new_lik = self.range_log_lik(start, end, &proposed, self.dispersion, self.ln_gamma_phi);
        let new_prior = self.seg_log_prior(&self.cps, i, &proposed);
        let log_hastings =
            (new_lik - self.seg_lik[i]) + (new_prior - self.seg_prior[i]) + correction;
        let accepted = self.accept(rng, log_hastings);
        if accepted {
            self.params[i] = proposed;
            self.seg_lik[i] = new_lik;
            self.seg_prior[i] = new_prior;
        }
        EngineOutcome {
            kind: kind.move_kind(),
            log_hastings,
            accepted,
            proposal: Proposal::Param { segment: i, kind, value },
        }
    }

    /// Random-walk update of the shared dispersion: ln φ* is truncated
    /// normal on [0, ln 100], so proposals live in [1, 100].
    pub fn move_dispersion(&mut self, rng: &mut impl Rng) -> EngineOutcome {
        let sigma = self.config.step_phi;
        if sigma == 0.0 {
            let _: f64 = rng.gen();
            return EngineOutcome {
                kind: MoveKind::Dispersion,
                log_hastings: 0.0,
                accepted: true,
                proposal: Proposal::Dispersion(self.dispersion),
            };
        }
        let hi = DISPERSION_MAX.ln();
        let ln_cur = self.dispersion.ln();
        let ln_new = trunc_normal_draw(rng, ln_cur, sigma, 0.0, hi);
        let phi_new = ln_new.exp().min(DISPERSION_MAX);
        let fwd = trunc_normal_ln_pdf(ln_new, ln_cur, sigma, 0.0, hi);
        let rev = trunc_normal_ln_pdf(ln_cur, ln_new, sigma, 0.0, hi);
        let correction = rev - fwd + (ln_new - ln_cur);
        let ln_gamma_new = ln_gamma(phi_new);
        // The dispersion is shared, so every segment's likelihood changes.
        let mut new_lik = Vec::with_capacity(self.m());
        for i in 0..self.m() {
            let end = self.seg_end(&self.cps, i);
            new_lik.push(self.range_log_lik(
                self.cps[i],
                end,
                &self.params[i],
                phi_new,
                ln_gamma_new,
            ));
        }
        let lp_phi_new = log_prior_dispersion(phi_new, self.prior);
        let log_hastings = (new_lik.iter().sum::<f64>() - self.total_log_lik())
            + (lp_phi_new - self.lp_phi)
            + correction;
        let accepted = self.accept(rng, log_hastings);
        if accepted {
            self.dispersion = phi_new;
            self.ln_gamma_phi = ln_gamma_new;
            self.seg_lik = new_lik;
            self.lp_phi = lp_phi_new;
        }
        EngineOutcome {
            kind: MoveKind::Dispersion,
            log_hastings,
            accepted,
            proposal: Proposal::Dispersion(phi_new),
        }
    }

    /// One λ, K, p update for every segment in ascending order.
    pub fn sweep_params(&mut self, rng: &mut impl Rng) {
        for i in 0..self.m() {
            self.move_segment_param(i, ParamKind::Lambda, rng);
            self.move_segment_param(i, ParamKind::K, rng);
            self.move_segment_param(i, ParamKind::P, rng);
        }
    }
}
