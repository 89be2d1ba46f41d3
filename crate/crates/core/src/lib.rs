//! Bayesian segmentation and forecasting of cumulative epidemic count
//! series.
//!
//! The model splits a series of cumulative counts into contiguous
//! segments at unknown change points; within each segment new cases
//! follow a negative binomial distribution around a generalized-logistic
//! growth mean. Inference runs by Markov chain Monte Carlo: either with a
//! fixed number of segments ([`sampler::fixed`]) or jointly over the
//! segment count with reversible-jump birth and death moves
//! ([`sampler::auto`]).
//!
//! A typical round trip:
//!
//! ```
//! use episeg::{inference, sampler, PriorSpec, SamplerConfig};
//! use rand::SeedableRng;
//!
//! let scenario = episeg::simgen::GlcScenario::default();
//! let (series, truth) = episeg::simgen::simulate_glc(&scenario).unwrap();
//!
//! let prior = PriorSpec::default();
//! let config = SamplerConfig { total_iterations: 200, burn_in: 100, ..Default::default() };
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
//! let trace = sampler::fixed::run_fixed_chain(&series, 1, &prior, &config, &mut rng).unwrap();
//!
//! let summary = inference::summarize(&trace, &series, &prior).unwrap();
//! assert_eq!(summary.map_state.segmentation.len(), truth.len());
//! ```
//!
//! Beyond fitting, [`inference`] turns traces into point estimates,
//! credible intervals, and forecasts; [`simgen`] generates ground-truth
//! data from growth-curve and stochastic SIR schemes; [`metrics`] scores
//! estimated segmentations against the truth.

mod error;
pub mod inference;
pub mod likelihood;
pub mod metrics;
mod params;
pub mod prior;
pub mod sampler;
mod segmentation;
mod series;
pub mod simgen;
pub mod stats;
mod trace;

pub use error::{Error, Result};
pub use params::{ModelState, PriorSpec, SamplerConfig, SegmentParams, DISPERSION_MAX};
pub use segmentation::{free_window, Segmentation};
pub use series::EpidemicSeries;
pub use trace::{ChainTrace, TraceSample};
