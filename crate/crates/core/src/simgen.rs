//! Ground-truth data generators for validation studies: a growth-curve
//! scheme with negative binomial noise and a stochastic
//! susceptible-infectious-removed (SIR) scheme, plus the shared negative
//! binomial sampler.
//!
//! Change points in a scenario are observation indices (0-based) marking
//! the first time point of each new segment; the returned segmentation
//! carries exactly those points as ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::glc_mean;
use crate::params::SegmentParams;
use crate::segmentation::Segmentation;
use crate::series::EpidemicSeries;
use crate::stats::nb_draw as nb_draw_unchecked;

/// Replicate count of a standard simulation batch.
pub const DEFAULT_REPLICATES: usize = 50;

/// One negative binomial draw via the gamma-Poisson mixture: rate ~
/// Gamma(shape = dispersion, scale = mean/dispersion), then Poisson(rate).
pub fn nb_draw(mean: f64, dispersion: f64, rng: &mut impl Rng) -> Result<u64> {
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::Domain(format!("negative binomial mean must be positive, got {mean}")));
    }
    if !(dispersion > 0.0) || !dispersion.is_finite() {
        return Err(Error::Domain(format!(
            "negative binomial dispersion must be positive, got {dispersion}"
        )));
    }
    Ok(nb_draw_unchecked(rng, mean, dispersion))
}

/// Growth-curve generator settings. Defaults reproduce the three-wave
/// reference setting: 150 time points, population 200,000, initial count
/// 100, change points at 52 and 103, and low-dispersion noise (φ = 100).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlcScenario {
    pub horizon: usize,
    pub population: u64,
    pub initial_count: u64,
    pub changepoints: Vec<usize>,
    pub lambda: Vec<f64>,
    pub final_size: Vec<f64>,
    pub scaling: Vec<f64>,
    pub dispersion: f64,
    pub seed: u64,
}

impl Default for GlcScenario {
    fn default() -> Self {
        GlcScenario {
            horizon: 150,
            population: 200_000,
            initial_count: 100,
            changepoints: vec![52, 103],
            lambda: vec![0.1, 0.06, 0.08],
            final_size: vec![10_000.0, 9_000.0, 15_000.0],
            scaling: vec![0.9, 0.85, 0.9],
            dispersion: 100.0,
            seed: 0,
        }
    }
}

fn validate_changepoints(changepoints: &[usize], horizon: usize) -> Result<()> {
    for (i, &cp) in changepoints.iter().enumerate() {
        if cp < 1 || cp >= horizon {
            return Err(Error::Invalid(format!(
                "change point {cp} outside the interior 1..{horizon}"
            )));
        }
        if i > 0 && changepoints[i - 1] >= cp {
            return Err(Error::Invalid("change points must be strictly increasing".into()));
        }
    }
    Ok(())
}

impl GlcScenario {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Invalid("horizon must be at least 1".into()));
        }
        if self.initial_count == 0 || self.initial_count > self.population {
            return Err(Error::Invalid(format!(
                "initial count {} outside 1..={}",
                self.initial_count, self.population
            )));
        }
        validate_changepoints(&self.changepoints, self.horizon)?;
        let segments = self.changepoints.len() + 1;
        if self.lambda.len() != segments
            || self.final_size.len() != segments
            || self.scaling.len() != segments
        {
            return Err(Error::Invalid(format!(
                "{} change points need {segments} values per parameter, got λ:{} K:{} p:{}",
                self.changepoints.len(),
                self.lambda.len(),
                self.final_size.len(),
                self.scaling.len()
            )));
        }
        for m in 0..segments {
            SegmentParams {
                final_size: self.final_size[m],
                growth_rate: self.lambda[m],
                scaling: self.scaling[m],
            }
            .validate()?;
        }
        if !(self.dispersion > 0.0) || !self.dispersion.is_finite() {
            return Err(Error::Invalid(format!(
                "dispersion must be positive, got {}",
                self.dispersion
            )));
        }
        Ok(())
    }

    fn segmentation(&self) -> Result<Segmentation> {
        let mut cps: Vec<u32> = vec![0];
        cps.extend(self.changepoints.iter().map(|&c| c as u32));
        Segmentation::from_changepoints(self.horizon, &cps)
    }
}

/// Stochastic SIR generator settings. Defaults reproduce the four-phase
/// reference setting: 120 time points, population 10⁶, change points at
/// 31, 61, 91, reproduction numbers (3.0, 2.0, 1.1, 0.5) with removal rate
/// 0.03, 100 initially infectious, and low-dispersion noise (φ = 100 for
/// both compartments). Per-segment transmission rates are ℛ₀ₘ·γ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SirScenario {
    pub horizon: usize,
    pub population: u64,
    pub initial_infected: u64,
    pub initial_removed: u64,
    pub changepoints: Vec<usize>,
    pub r0: Vec<f64>,
    pub removal_rate: f64,
    pub dispersion_s: f64,
    pub dispersion_r: f64,
    pub seed: u64,
}

impl Default for SirScenario {
    fn default() -> Self {
        SirScenario {
            horizon: 120,
            population: 1_000_000,
            initial_infected: 100,
            initial_removed: 0,
            changepoints: vec![31, 61, 91],
            r0: vec![3.0, 2.0, 1.1, 0.5],
            removal_rate: 0.03,
            dispersion_s: 100.0,
            dispersion_r: 100.0,
            seed: 0,
        }
    }
}

impl SirScenario {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Invalid("horizon must be at least 1".into()));
        }
        if self.initial_infected == 0 {
            return Err(Error::Invalid("at least one initially infectious individual".into()));
        }
        if self.initial_infected + self.initial_removed > self.population {
            return Err(Error::Invalid("initial compartments exceed the population".into()));
        }
        validate_changepoints(&self.changepoints, self.horizon)?;
        if self.r0.len() != self.changepoints.len() + 1 {
            return Err(Error::Invalid(format!(
                "{} change points need {} reproduction numbers, got {}",
                self.changepoints.len(),
                self.changepoints.len() + 1,
                self.r0.len()
            )));
        }
        if self.r0.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::Invalid("reproduction numbers must be positive".into()));
        }
        if !(self.removal_rate > 0.0) || !self.removal_rate.is_finite() {
            return Err(Error::Invalid(format!(
                "removal rate must be positive, got {}",
                self.removal_rate
            )));
        }
        for (name, phi) in [("susceptible", self.dispersion_s), ("removed", self.dispersion_r)] {
            if !(phi > 0.0) || !phi.is_finite() {
                return Err(Error::Invalid(format!(
                    "{name} dispersion must be positive, got {phi}"
                )));
            }
        }
        Ok(())
    }

    fn segmentation(&self) -> Result<Segmentation> {
        let mut cps: Vec<u32> = vec![0];
        cps.extend(self.changepoints.iter().map(|&c| c as u32));
        Segmentation::from_changepoints(self.horizon, &cps)
    }
}

/// Simulates cumulative counts whose new cases are negative binomial around
/// the growth-curve mean of the active segment. The cumulative count is
/// capped at the population. Returns the series and the generating
/// segmentation.
pub fn simulate_glc(scenario: &GlcScenario) -> Result<(EpidemicSeries, Segmentation)> {
    scenario.validate()?;
    let segmentation = scenario.segmentation()?;
    let labels = segmentation.labels();
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut cumulative = Vec::with_capacity(scenario.horizon);
    let mut c = scenario.initial_count;
    for &label in labels {
        let m = label as usize - 1;
        let theta = SegmentParams {
            final_size: scenario.final_size[m],
            growth_rate: scenario.lambda[m],
            scaling: scenario.scaling[m],
        };
        let mean = glc_mean(c, &theta);
        let inc = nb_draw_unchecked(&mut rng, mean, scenario.dispersion);
        c = c.saturating_add(inc).min(scenario.population);
        cumulative.push(c);
    }
    let series = EpidemicSeries::new(scenario.initial_count, cumulative, scenario.population)?;
    Ok((series, segmentation))
}

/// SIR path with full compartments; the public entry discards S and R.
/// Compartment counts satisfy S + I + R = N at every step by construction:
/// I is defined as the remainder, and draws are clamped so S stays
/// nonnegative and R never overshoots N − S.
fn sir_path(scenario: &SirScenario) -> Result<(Vec<u64>, Vec<u64>, Segmentation)> {
    scenario.validate()?;
    let segmentation = scenario.segmentation()?;
    let labels = segmentation.labels();
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let n = scenario.population;
    let gamma = scenario.removal_rate;
    let mut s = n - scenario.initial_infected - scenario.initial_removed;
    let mut r = scenario.initial_removed;
    let mut s_traj = Vec::with_capacity(scenario.horizon);
    let mut r_traj = Vec::with_capacity(scenario.horizon);
    for &label in labels {
        let beta = scenario.r0[label as usize - 1] * gamma;
        let i = n - s - r;
        let mean_s = beta * s as f64 * i as f64 / n as f64;
        let new_infections = if mean_s > 0.0 {
            nb_draw_unchecked(&mut rng, mean_s, scenario.dispersion_s).min(s)
        } else {
            0
        };
        s -= new_infections;
        let mean_r = gamma * i as f64;
        let new_removals = if mean_r > 0.0 {
            nb_draw_unchecked(&mut rng, mean_r, scenario.dispersion_r)
        } else {
            0
        };
        r = (r + new_removals).min(n - s);
        s_traj.push(s);
        r_traj.push(r);
    }
    Ok((s_traj, r_traj, segmentation))
}

/// Simulates cumulative counts C_t = N − S_t from the stochastic SIR
/// system: new infections deplete S with a negative binomial draw around
/// β_m·S·I/N, removals grow R around γ·I, and I is the remainder. Extinct
/// states (I = 0) freeze. Returns the series and the generating
/// segmentation.
pub fn simulate_sir(scenario: &SirScenario) -> Result<(EpidemicSeries, Segmentation)> {
    let (s_traj, _, segmentation) = sir_path(scenario)?;
    let cumulative: Vec<u64> = s_traj.iter().map(|&s| scenario.population - s).collect();
    let series = EpidemicSeries::new(
        scenario.initial_infected + scenario.initial_removed,
        cumulative,
        scenario.population,
    )?;
    Ok((series, segmentation))
}

/// Generates `replicates` growth-curve series; replicate k runs with seed
/// `scenario.seed + k`.
pub fn glc_batch(
    scenario: &GlcScenario,
    replicates: usize,
) -> Result<Vec<(EpidemicSeries, Segmentation)>> {
    (0..replicates)
        .map(|k| {
            let mut rep = scenario.clone();
            rep.seed = scenario.seed.wrapping_add(k as u64);
            simulate_glc(&rep)
        })
        .collect()
}

/// Generates `replicates` SIR series; replicate k runs with seed
/// `scenario.seed + k`.
pub fn sir_batch(
    scenario: &SirScenario,
    replicates: usize,
) -> Result<Vec<(EpidemicSeries, Segmentation)>> {
    (0..replicates)
        .map(|k| {
            let mut rep = scenario.clone();
            rep.seed = scenario.seed.wrapping_add(k as u64);
            simulate_sir(&rep)
        })
        .collect()
}
