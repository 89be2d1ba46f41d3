//! Prior log-densities for every block of the model.
//!
//! Support violations are reported in-band as −∞ rather than as errors, so
//! Metropolis ratios can reject invalid proposals naturally.
//!
//! The indicator prior comes in two flavors. [`log_prior_indicator`] is the
//! unnormalized product of independent Bernoulli(ω_t) terms over the free
//! positions, restricted to segmentations satisfying the minimum-gap rule;
//! within a fixed segment count the missing normalizer is constant and
//! cancels from every Metropolis ratio. Moves that change the segment count
//! need the normalizer itself, because the total Bernoulli mass of the
//! gap-feasible configurations varies with M: [`log_indicator_partitions`]
//! computes ln Z_M for every M so that samplers can work with the properly
//! normalized conditional prior π(δ | M) = Bern(δ) / Z_M.

use crate::params::{PriorSpec, SegmentParams, DISPERSION_MAX};
use crate::segmentation::{free_window, Segmentation};
use crate::stats::{beta_ln_pdf, gamma_ln_pdf, ln_factorial, log_sum_exp};

/// Probabilities are pulled away from 1 by this margin inside the partition
/// function so that near-forced positions keep the normalizer finite.
const OMEGA_CEILING: f64 = 1.0 - 1e-12;

/// Unnormalized log-prior of the change-point indicator:
/// Σ_t [δ_t ln ω_t + (1−δ_t) ln(1−ω_t)] over the free positions
/// t ∈ [Q, T−Q], or −∞ when the gap rule is violated.
pub fn log_prior_indicator(segmentation: &Segmentation, prior: &PriorSpec) -> f64 {
    bern_log_mass(segmentation.len(), &segmentation.changepoint_positions(), prior)
}

/// Allocation-free form of [`log_prior_indicator`] over a sorted
/// change-point position list; the samplers call this directly.
pub(crate) fn bern_log_mass(t_len: usize, cps: &[usize], prior: &PriorSpec) -> f64 {
    if !crate::segmentation::cps_gap_ok(t_len, cps, prior.q_gap) {
        return f64::NEG_INFINITY;
    }
    let Some((lo, hi)) = free_window(t_len, prior.q_gap) else {
        // No free positions: the single-segment model is the only valid
        // configuration and carries the full mass.
        return 0.0;
    };
    let mut next = cps.partition_point(|&c| c < lo);
    let mut total = 0.0;
    for t in lo..=hi {
        let w = prior.omega(t);
        if next < cps.len() && cps[next] == t {
            total += w.ln();
            next += 1;
        } else {
            total += (1.0 - w).ln();
        }
    }
    total
}

/// Log-prior of one segment's parameter triple: a uniform density for K on
/// (max segment cumulative count, ⌈ρN⌉], Ga(a_λ, b_λ) for λ, and
/// Beta(a_p, b_p) for p.
pub fn log_prior_segment_params(
    params: &SegmentParams,
    segment_max_cumulative: u64,
    prior: &PriorSpec,
    population: u64,
) -> f64 {
    let k_lo = segment_max_cumulative as f64;
    let k_hi = prior.k_upper(population);
    if !(k_hi > k_lo) || params.final_size <= k_lo || params.final_size > k_hi {
        return f64::NEG_INFINITY;
    }
    let k_term = -(k_hi - k_lo).ln();
    let lambda_term = gamma_ln_pdf(params.growth_rate, prior.a_lambda, prior.b_lambda);
    let p_term = beta_ln_pdf(params.scaling, prior.a_p, prior.b_p);
    k_term + lambda_term + p_term
}

/// Log-prior of the dispersion: Ga(a_φ, b_φ) restricted to (0, 100]. The
/// truncation constant is omitted; it does not depend on φ and cancels
/// from every acceptance ratio.
pub fn log_prior_dispersion(dispersion: f64, prior: &PriorSpec) -> f64 {
    if !(dispersion > 0.0 && dispersion <= DISPERSION_MAX) {
        return f64::NEG_INFINITY;
    }
    gamma_ln_pdf(dispersion, prior.a_phi, prior.b_phi)
}

/// Log-mass of the segment count under a Poisson(η) truncated to
/// [1, m_max]: m ln η − ln m! − ln Z.
pub fn log_prior_segment_count(m: usize, prior: &PriorSpec) -> f64 {
    if m == 0 || m > prior.m_max {
        return f64::NEG_INFINITY;
    }
    let ln_eta = prior.eta.ln();
    let terms: Vec<f64> =
        (1..=prior.m_max).map(|j| j as f64 * ln_eta - ln_factorial(j as u64)).collect();
    let ln_z = log_sum_exp(&terms);
    m as f64 * ln_eta - ln_factorial(m as u64) - ln_z
}

/// ln Z_m for m = 0..=max_m (index 0 is −∞), where Z_m is the total
/// Bernoulli prior mass of all gap-feasible indicators with exactly m
/// segments:
///
/// ```text
/// Z_m = Π_{t free} (1−ω_t) · Σ_{A ⊆ free, |A| = m−1, gap-feasible} Π_{t∈A} ω_t/(1−ω_t)
/// ```
///
/// The inner sum runs over dynamic programming in log space, keyed by the
/// largest chosen position, so positions with extreme ω and long series stay
/// numerically stable. Infeasible counts get −∞.
pub fn log_indicator_partitions(t_len: usize, prior: &PriorSpec, max_m: usize) -> Vec<f64> {
    let mut ln_z = vec![f64::NEG_INFINITY; max_m + 1];
    if max_m == 0 {
        return ln_z;
    }
    let free: Vec<usize> = match free_window(t_len, prior.q_gap) {
        Some((lo, hi)) => (lo..=hi).collect(),
        None => Vec::new(),
    };
    let mut ln_stay = 0.0; // Σ ln(1−ω_t) over free positions
    let mut ln_odds = Vec::with_capacity(free.len());
    for &t in &free {
        let w = prior.omega(t).min(OMEGA_CEILING);
        ln_stay += (1.0 - w).ln();
        ln_odds.push(w.ln() - (1.0 - w).ln());
    }

    // ln S_0 = 0 (the empty selection), so Z_1 is the all-stay product.
    ln_z[1] = ln_stay;

    // ln_end[i] = log sum of odds-products over feasible selections of the
    // current size whose largest element is free[i].
    let mut ln_end: Vec<f64> = ln_odds.clone();
    for m in 2..=max_m {
        if m >= 3 {
            let mut next = vec![f64::NEG_INFINITY; free.len()];
            for i in 0..free.len() {
                let reachable: Vec<f64> = (0..i)
                    .filter(|&j| free[i] - free[j] >= prior.q_gap)
                    .map(|j| ln_end[j])
                    .collect();
                next[i] = ln_odds[i] + log_sum_exp(&reachable);
            }
            ln_end = next;
        }
        ln_z[m] = ln_stay + log_sum_exp(&ln_end);
    }
    ln_z
}

/// ln Z_m for a single segment count; see [`log_indicator_partitions`].
pub fn log_indicator_partition(t_len: usize, prior: &PriorSpec, m: usize) -> f64 {
    log_indicator_partitions(t_len, prior, m)[m]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SegmentParams;

    #[test]
    fn indicator_gap_violation_is_minus_infinity() {
        let prior = PriorSpec::default();
        let crowded = Segmentation::from_changepoints(30, &[0, 8, 12]).unwrap();
        assert_eq!(log_prior_indicator(&crowded, &prior), f64::NEG_INFINITY);
        let early = Segmentation::from_changepoints(30, &[0, 3]).unwrap();
        assert_eq!(log_prior_indicator(&early, &prior), f64::NEG_INFINITY);
    }

    #[test]
    fn indicator_all_zero_matches_closed_form() {
        // T=150, Q=7: 137 free positions, each contributing ln(1−ω₀).
        let prior = PriorSpec::default();
        let seg = Segmentation::single_segment(150).unwrap();
        let got = log_prior_indicator(&seg, &prior);
        assert!((got - (-0.13706854570094409)).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn forced_position_contributes_zero() {
        let mut prior = PriorSpec::default();
        prior.omega_overrides.insert(20, 1.0);
        let with_cp = Segmentation::from_changepoints(60, &[0, 20]).unwrap();
        let baseline = {
            // Same configuration under a prior without the override, minus
            // what position 20 contributes there.
            let plain = PriorSpec::default();
            log_prior_indicator(&with_cp, &plain) - 0.001f64.ln()
        };
        let got = log_prior_indicator(&with_cp, &prior);
        assert!((got - baseline).abs() < 1e-12);
        // Leaving a forced position empty has zero prior mass.
        let without = Segmentation::single_segment(60).unwrap();
        assert_eq!(log_prior_indicator(&without, &prior), f64::NEG_INFINITY);
    }

    #[test]
    fn short_series_has_trivial_indicator_prior() {
        let prior = PriorSpec::default();
        let seg = Segmentation::single_segment(10).unwrap();
        assert_eq!(log_prior_indicator(&seg, &prior), 0.0);
    }

    #[test]
    fn final_size_support_is_half_open() {
        let prior = PriorSpec::default();
        let theta = |k: f64| SegmentParams { final_size: k, growth_rate: 1.0, scaling: 0.5 };
        // N = 1000, ρ = 0.3 → K ∈ (120, 300].
        assert_eq!(log_prior_segment_params(&theta(120.0), 120, &prior, 1000), f64::NEG_INFINITY);
        assert_eq!(log_prior_segment_params(&theta(301.0), 120, &prior, 1000), f64::NEG_INFINITY);
        assert!(log_prior_segment_params(&theta(300.0), 120, &prior, 1000).is_finite());
        assert!(log_prior_segment_params(&theta(120.5), 120, &prior, 1000).is_finite());
        // Empty support when the segment maximum already exceeds ⌈ρN⌉.
        assert_eq!(log_prior_segment_params(&theta(200.0), 400, &prior, 1000), f64::NEG_INFINITY);
    }

    #[test]
    fn flat_scaling_prior_drops_out() {
        // a_p = b_p = 1 makes the Beta term zero, so the density is the
        // uniform K term plus the Gamma λ term only.
        let prior = PriorSpec::default();
        let theta = SegmentParams { final_size: 200.0, growth_rate: 1.0, scaling: 0.37 };
        let got = log_prior_segment_params(&theta, 120, &prior, 1000);
        let want = -(300.0f64 - 120.0).ln() + (-6.915086640662836);
        assert!((got - want).abs() < 1e-12, "got {got} want {want}");
    }

    #[test]
    fn dispersion_prior_support_and_value() {
        let prior = PriorSpec::default();
        assert_eq!(log_prior_dispersion(0.0, &prior), f64::NEG_INFINITY);
        assert_eq!(log_prior_dispersion(101.0, &prior), f64::NEG_INFINITY);
        assert!(log_prior_dispersion(100.0, &prior).is_finite());
        let got = log_prior_dispersion(10.0, &prior);
        assert!((got - (-9.224369148563887)).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn segment_count_prior_masses() {
        let prior = PriorSpec::default();
        assert_eq!(log_prior_segment_count(0, &prior), f64::NEG_INFINITY);
        assert_eq!(log_prior_segment_count(51, &prior), f64::NEG_INFINITY);
        let r = log_prior_segment_count(2, &prior) - log_prior_segment_count(1, &prior);
        // η/2 with η = 10⁻⁴.
        assert!((r - (-9.903487552536128)).abs() < 1e-12, "ratio {r}");
        let one = log_prior_segment_count(1, &prior);
        assert!((one - (-5.0000416666666632e-5)).abs() < 1e-15, "got {one}");
    }

    #[test]
    fn segment_count_prior_normalizes() {
        let mut prior = PriorSpec::default();
        prior.eta = 0.5;
        prior.m_max = 5;
        let total: f64 = (1..=5).map(|m| log_prior_segment_count(m, &prior).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    /// Brute-force reference: enumerate every subset of the free window,
    /// keep the gap-feasible ones of the right size, and sum Bernoulli
    /// products directly.
    fn brute_force_partition(t_len: usize, prior: &PriorSpec, m: usize) -> f64 {
        let (lo, hi) = free_window(t_len, prior.q_gap).unwrap();
        let free: Vec<usize> = (lo..=hi).collect();
        let n = free.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            let chosen: Vec<usize> =
                (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| free[i]).collect();
            if chosen.len() != m - 1 {
                continue;
            }
            let mut positions = vec![0usize];
            positions.extend(&chosen);
            if positions.windows(2).any(|w| w[1] - w[0] < prior.q_gap) {
                continue;
            }
            let mut p = 1.0;
            for &t in &free {
                let w = prior.omega(t);
                p *= if chosen.contains(&t) { w } else { 1.0 - w };
            }
            total += p;
        }
        total
    }

    #[test]
    fn partition_matches_enumeration() {
        let mut prior = PriorSpec::default();
        prior.omega_default = 0.3;
        prior.omega_overrides.insert(10, 0.85);
        prior.omega_overrides.insert(15, 0.02);
        // T=25, Q=7: free window [7, 18], at most 2 interior points.
        let ln_z = log_indicator_partitions(25, &prior, 4);
        for m in 1..=3 {
            let want = brute_force_partition(25, &prior, m);
            let got = ln_z[m].exp();
            assert!((got - want).abs() < 1e-12 * want.max(1.0), "m={m}: got {got} want {want}");
        }
        // Three interior points cannot fit with Q=7 in T=25.
        assert_eq!(ln_z[4], f64::NEG_INFINITY);
        assert_eq!(ln_z[0], f64::NEG_INFINITY);
    }

    #[test]
    fn partition_single_segment_closed_form() {
        let mut prior = PriorSpec::default();
        prior.omega_default = 0.01;
        let ln_z1 = log_indicator_partition(40, &prior, 1);
        // 27 free positions, all empty.
        let want = 27.0 * (0.99f64).ln();
        assert!((ln_z1 - want).abs() < 1e-12);
    }

    #[test]
    fn partition_sums_to_one_over_all_counts() {
        // Σ_m Z_m must equal the total mass of all gap-feasible indicators;
        // with small T and moderate ω the complement (infeasible sets) is
        // checked by enumeration instead: Σ_m Z_m + infeasible mass = 1.
        let mut prior = PriorSpec::default();
        prior.omega_default = 0.2;
        let t_len = 20; // free window [7, 13], at most one interior point
        let ln_z = log_indicator_partitions(t_len, &prior, 3);
        let feasible: f64 = ln_z[1].exp() + ln_z[2].exp();
        let mut infeasible = 0.0;
        let (lo, hi) = free_window(t_len, prior.q_gap).unwrap();
        let free: Vec<usize> = (lo..=hi).collect();
        let n = free.len();
        for mask in 0u32..(1 << n) {
            let chosen: Vec<usize> =
                (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| free[i]).collect();
            let mut positions = vec![0usize];
            positions.extend(&chosen);
            if positions.windows(2).all(|w| w[1] - w[0] >= prior.q_gap) {
                continue;
            }
            let mut p = 1.0;
            for &t in &free {
                let w = prior.omega(t);
                p *= if chosen.contains(&t) { w } else { 1.0 - w };
            }
            infeasible += p;
        }
        assert_eq!(ln_z[3], f64::NEG_INFINITY);
        assert!((feasible + infeasible - 1.0).abs() < 1e-12);
    }
}
