//! Model parameters, prior hyper-parameters, and sampler settings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::Segmentation;

/// Upper support bound for the dispersion φ. Proposals for φ are truncated
/// to this value, and the prior density is zero beyond it.
pub const DISPERSION_MAX: f64 = 100.0;

/// Growth-curve parameters Θ_m = (K_m, λ_m, p_m) of one segment.
///
/// `final_size` is the asymptotic cumulative count K of the segment's
/// logistic curve, `growth_rate` the intrinsic rate λ per time step, and
/// `scaling` the exponent p ∈ [0, 1] that damps growth at low counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    pub final_size: f64,
    pub growth_rate: f64,
    pub scaling: f64,
}

impl SegmentParams {
    /// Context-free sanity check: positivity and the scaling range. Whether
    /// `final_size` lies inside its data-dependent support is a question for
    /// the prior, which reports violations as −∞ instead of erroring.
    pub fn validate(&self) -> Result<()> {
        if !(self.final_size.is_finite() && self.final_size > 0.0) {
            return Err(Error::Domain(format!("final_size must be positive, got {}", self.final_size)));
        }
        if !(self.growth_rate.is_finite() && self.growth_rate > 0.0) {
            return Err(Error::Domain(format!(
                "growth_rate must be positive, got {}",
                self.growth_rate
            )));
        }
        if !(self.scaling.is_finite() && (0.0..=1.0).contains(&self.scaling)) {
            return Err(Error::Domain(format!("scaling must lie in [0, 1], got {}", self.scaling)));
        }
        Ok(())
    }
}

/// Full sampler state: a segmentation, one parameter triple per segment in
/// segment order, and the shared dispersion φ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub segmentation: Segmentation,
    pub params: Vec<SegmentParams>,
    pub dispersion: f64,
}

impl ModelState {
    pub fn validate(&self) -> Result<()> {
        if self.params.len() != self.segmentation.segment_count() {
            return Err(Error::Invalid(format!(
                "{} parameter triples for {} segments",
                self.params.len(),
                self.segmentation.segment_count()
            )));
        }
        for p in &self.params {
            p.validate()?;
        }
        if !(self.dispersion > 0.0 && self.dispersion <= DISPERSION_MAX) {
            return Err(Error::Domain(format!(
                "dispersion must lie in (0, {DISPERSION_MAX}], got {}",
                self.dispersion
            )));
        }
        Ok(())
    }
}

/// Prior hyper-parameters.
///
/// The change-point indicator carries independent Bernoulli(ω_t) priors on
/// the free positions, with a shared default ω₀ and optional per-position
/// overrides for dates with external evidence of a change. K is uniform on
/// (max segment count, ⌈ρN⌉], λ ~ Ga(a_λ, b_λ), p ~ Beta(a_p, b_p),
/// φ ~ Ga(a_φ, b_φ) truncated to (0, 100], and the segment count follows a
/// Poisson(η) truncated to [1, m_max].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorSpec {
    pub omega_default: f64,
    pub omega_overrides: BTreeMap<usize, f64>,
    pub q_gap: usize,
    pub rho: f64,
    pub a_lambda: f64,
    pub b_lambda: f64,
    pub a_p: f64,
    pub b_p: f64,
    pub a_phi: f64,
    pub b_phi: f64,
    pub eta: f64,
    pub m_max: usize,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            omega_default: 0.001,
            omega_overrides: BTreeMap::new(),
            q_gap: 7,
            rho: 0.3,
            a_lambda: 0.001,
            b_lambda: 0.001,
            a_p: 1.0,
            b_p: 1.0,
            a_phi: 0.001,
            b_phi: 0.001,
            eta: 1e-4,
            m_max: 50,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let prob_ok = |w: f64| (0.0..=1.0).contains(&w);
        if !prob_ok(self.omega_default) {
            return Err(Error::Invalid(format!(
                "omega_default must lie in [0, 1], got {}",
                self.omega_default
            )));
        }
        for (&t, &w) in &self.omega_overrides {
            if !prob_ok(w) {
                return Err(Error::Invalid(format!(
                    "omega override at index {t} must lie in [0, 1], got {w}"
                )));
            }
        }
        if self.q_gap == 0 {
            return Err(Error::Invalid("q_gap must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::Invalid(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        for (name, v) in [
            ("a_lambda", self.a_lambda),
            ("b_lambda", self.b_lambda),
            ("a_p", self.a_p),
            ("b_p", self.b_p),
            ("a_phi", self.a_phi),
            ("b_phi", self.b_phi),
            ("eta", self.eta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.m_max == 0 {
            return Err(Error::Invalid("m_max must be at least 1".into()));
        }
        Ok(())
    }

    /// Bernoulli inclusion probability for position t.
    pub fn omega(&self, t: usize) -> f64 {
        self.omega_overrides.get(&t).copied().unwrap_or(self.omega_default)
    }

    /// Upper support bound ⌈ρN⌉ for every segment's final size.
    pub fn k_upper(&self, population: u64) -> f64 {
        (self.rho * population as f64).ceil()
    }

    /// Largest segment count reachable for a series of `t_len` points:
    /// `m_max` capped by the structural limit ⌊T/Q⌋ of the gap rule.
    pub fn effective_m_max(&self, t_len: usize) -> usize {
        self.m_max.min(t_len / self.q_gap).max(1)
    }
}

/// Random-walk step sizes, chain length, and seed for one MCMC run.
///
/// The step sizes act on the log scale of each parameter: proposals draw
/// ln Θ* from a normal (truncated where the support requires) centered at
/// the current ln Θ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub total_iterations: usize,
    pub burn_in: usize,
    pub step_lambda: f64,
    pub step_k: f64,
    pub step_p: f64,
    pub step_phi: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            total_iterations: 100_000,
            burn_in: 50_000,
            step_lambda: 0.1,
            step_k: 1.0,
            step_p: 0.1,
            step_phi: 1.0,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.total_iterations {
            return Err(Error::Invalid(format!(
                "burn_in {} must be smaller than total_iterations {}",
                self.burn_in, self.total_iterations
            )));
        }
        // Zero is allowed: a zero step size degenerates to proposing the
        // current value, which single-move updates accept as a no-op.
        // Chain entry points that cannot tolerate frozen proposals add
        // their own positivity checks.
        for (name, v) in [
            ("step_lambda", self.step_lambda),
            ("step_k", self.step_k),
            ("step_p", self.step_p),
            ("step_phi", self.step_phi),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Invalid(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// Number of retained (post-burn-in) samples.
    pub fn retained(&self) -> usize {
        self.total_iterations - self.burn_in
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::Segmentation;

    #[test]
    fn defaults_are_valid() {
        PriorSpec::default().validate().unwrap();
        SamplerConfig::default().validate().unwrap();
        assert_eq!(SamplerConfig::default().retained(), 50_000);
    }

    #[test]
    fn omega_overrides_take_precedence() {
        let mut prior = PriorSpec::default();
        prior.omega_overrides.insert(14, 0.9);
        assert_eq!(prior.omega(14), 0.9);
        assert_eq!(prior.omega(15), 0.001);
    }

    #[test]
    fn k_upper_rounds_up() {
        let prior = PriorSpec::default();
        // 0.3 * 101 = 30.3 → 31.
        assert_eq!(prior.k_upper(101), 31.0);
        assert_eq!(prior.k_upper(100), 30.0);
    }

    #[test]
    fn effective_m_max_respects_gap_limit() {
        let prior = PriorSpec::default();
        assert_eq!(prior.effective_m_max(150), 21); // 150 / 7
        assert_eq!(prior.effective_m_max(1000), 50); // capped by m_max
        assert_eq!(prior.effective_m_max(5), 1); // too short for 2 segments
    }

    #[test]
    fn state_validation_checks_shape_and_dispersion() {
        let seg = Segmentation::from_changepoints(20, &[0, 9]).unwrap();
        let theta = SegmentParams { final_size: 100.0, growth_rate: 0.1, scaling: 0.5 };
        let good = ModelState { segmentation: seg.clone(), params: vec![theta, theta], dispersion: 5.0 };
        good.validate().unwrap();

        let wrong_len = ModelState { segmentation: seg.clone(), params: vec![theta], dispersion: 5.0 };
        assert!(wrong_len.validate().is_err());

        let bad_phi = ModelState { segmentation: seg, params: vec![theta, theta], dispersion: 101.0 };
        assert!(bad_phi.validate().is_err());
    }

    #[test]
    fn segment_params_validation() {
        let ok = SegmentParams { final_size: 10.0, growth_rate: 0.2, scaling: 1.0 };
        ok.validate().unwrap();
        assert!(SegmentParams { final_size: 0.0, ..ok }.validate().is_err());
        assert!(SegmentParams { growth_rate: -1.0, ..ok }.validate().is_err());
        assert!(SegmentParams { scaling: 1.5, ..ok }.validate().is_err());
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        let mut p = PriorSpec::default();
        p.rho = 0.0;
        assert!(p.validate().is_err());
        let mut p = PriorSpec::default();
        p.eta = 0.0;
        assert!(p.validate().is_err());
        let mut p = PriorSpec::default();
        p.omega_overrides.insert(3, 1.5);
        assert!(p.validate().is_err());
        let mut c = SamplerConfig::default();
        c.burn_in = c.total_iterations;
        assert!(c.validate().is_err());
    }
}
