//! Run configuration: one JSON document describing a complete run, echoed
//! into the summary artifact. Command-line flags override individual fields.

use std::path::PathBuf;

use episeg::simgen::{GlcScenario, SirScenario, DEFAULT_REPLICATES};
use episeg::{PriorSpec, SamplerConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// The workflow a run performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Fit with a fixed, user-chosen segment count.
    FitManual,
    /// Fit with the segment count sampled alongside everything else.
    FitAuto,
    /// Automatic fit followed by posterior predictive draws of future
    /// new cases.
    Forecast,
    SimulateGlc,
    SimulateSir,
    /// Score a fitted segmentation against a ground-truth sidecar.
    Evaluate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub mode: Mode,
    pub input_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub prior: PriorSpec,
    pub sampler: SamplerConfig,
    /// Segment count for fit-manual, absent otherwise.
    pub m_fixed: Option<usize>,
    /// Number of future time points for forecast mode, absent otherwise.
    pub horizon: Option<usize>,
    pub chains: usize,
    /// Also write per-chain trace CSVs.
    pub emit_trace: bool,
    /// Scenario for simulate-glc; the default scenario when absent.
    pub glc: Option<GlcScenario>,
    /// Scenario for simulate-sir; the default scenario when absent.
    pub sir: Option<SirScenario>,
    pub replicates: usize,
    /// Ground-truth sidecar consumed by evaluate mode.
    pub truth_path: Option<PathBuf>,
    /// Observed continuation of the input series used to score a forecast.
    pub actuals_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::FitAuto,
            input_path: None,
            output_dir: PathBuf::from("episeg-out"),
            prior: PriorSpec::default(),
            sampler: SamplerConfig::default(),
            m_fixed: None,
            horizon: None,
            chains: 1,
            emit_trace: false,
            glc: None,
            sir: None,
            replicates: DEFAULT_REPLICATES,
            truth_path: None,
            actuals_path: None,
        }
    }
}

impl RunConfig {
    /// Structural checks that do not need the data: mode-specific fields
    /// must be present exactly when their mode asks for them.
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(CliError::Config("chains must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(CliError::Config("replicates must be at least 1".into()));
        }
        match (self.mode, self.m_fixed) {
            (Mode::FitManual, None) => {
                return Err(CliError::Config("fit-manual requires m_fixed".into()));
            }
            (Mode::FitManual, Some(0)) => {
                return Err(CliError::Config("m_fixed must be at least 1".into()));
            }
            (Mode::FitManual, Some(_)) => {}
            (_, Some(_)) => {
                return Err(CliError::Config(
                    "m_fixed only applies to fit-manual; other fit modes sample the segment count"
                        .into(),
                ));
            }
            (_, None) => {}
        }
        match (self.mode, self.horizon) {
            (Mode::Forecast, None) => {
                return Err(CliError::Config("forecast requires a horizon".into()));
            }
            (Mode::Forecast, Some(0)) => {
                return Err(CliError::Config("horizon must be at least 1".into()));
            }
            (Mode::Forecast, Some(_)) => {}
            (_, Some(_)) => {
                return Err(CliError::Config("horizon only applies to forecast mode".into()));
            }
            (_, None) => {}
        }
        let needs_input = matches!(
            self.mode,
            Mode::FitManual | Mode::FitAuto | Mode::Forecast | Mode::Evaluate
        );
        if needs_input && self.input_path.is_none() {
            return Err(CliError::Config(format!(
                "{} requires an input file",
                mode_name(self.mode)
            )));
        }
        if self.mode == Mode::Evaluate && self.truth_path.is_none() {
            return Err(CliError::Config("evaluate requires a ground-truth file".into()));
        }
        if self.actuals_path.is_some() && self.mode != Mode::Forecast {
            return Err(CliError::Config("actuals only apply to forecast mode".into()));
        }
        Ok(())
    }
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::FitManual => "fit-manual",
        Mode::FitAuto => "fit-auto",
        Mode::Forecast => "forecast",
        Mode::SimulateGlc => "simulate-glc",
        Mode::SimulateSir => "simulate-sir",
        Mode::Evaluate => "evaluate",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(mode: Mode) -> RunConfig {
        RunConfig {
            mode,
            input_path: Some(PathBuf::from("series.csv")),
            truth_path: Some(PathBuf::from("truth.json")),
            ..RunConfig::default()
        }
    }

    #[test]
    fn m_fixed_is_tied_to_manual_mode() {
        let mut cfg = base(Mode::FitManual);
        assert!(cfg.validate().is_err());
        cfg.m_fixed = Some(3);
        cfg.validate().unwrap();

        let mut auto = base(Mode::FitAuto);
        auto.m_fixed = Some(3);
        assert!(auto.validate().is_err());
    }

    #[test]
    fn horizon_is_tied_to_forecast_mode() {
        let mut cfg = base(Mode::Forecast);
        assert!(cfg.validate().is_err());
        cfg.horizon = Some(30);
        cfg.validate().unwrap();

        let mut fit = base(Mode::FitAuto);
        fit.horizon = Some(30);
        assert!(fit.validate().is_err());
    }

    #[test]
    fn simulate_needs_no_input() {
        let cfg = RunConfig { mode: Mode::SimulateGlc, ..RunConfig::default() };
        cfg.validate().unwrap();
        let missing = RunConfig { mode: Mode::FitAuto, ..RunConfig::default() };
        assert!(missing.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = RunConfig {
            mode: Mode::Forecast,
            horizon: Some(50),
            input_path: Some(PathBuf::from("data.csv")),
            chains: 4,
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
