//! Series files and run artifacts.
//!
//! A series file is a two-column CSV with header `date,cumulative`,
//! preceded by comment lines `# population=N` and `# initial_count=N`.
//! Dates are carried as opaque labels; the model itself is index-based.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use episeg::inference::PosteriorSummary;
use episeg::simgen::{GlcScenario, SirScenario};
use episeg::{ChainTrace, EpidemicSeries, Segmentation};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// A parsed series file: the validated series plus its date labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedSeries {
    pub series: EpidemicSeries,
    pub dates: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Reads and validates a series file. Errors carry 1-based data-row
/// numbers so a bad cell can be found by eye.
pub fn load_series(path: &Path) -> Result<LoadedSeries> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut population: Option<u64> = None;
    let mut initial_count: Option<u64> = None;
    let mut lines = text.lines().peekable();

    while let Some(line) = lines.peek() {
        let Some(comment) = line.strip_prefix('#') else { break };
        let (key, value) = comment.split_once('=').ok_or_else(|| CliError::Format {
            path: path.to_path_buf(),
            message: format!("metadata line {comment:?} is not of the form key=value"),
        })?;
        let slot = match key.trim() {
            "population" => &mut population,
            "initial_count" => &mut initial_count,
            other => {
                return Err(CliError::Format {
                    path: path.to_path_buf(),
                    message: format!("unknown metadata key {other:?}"),
                });
            }
        };
        *slot = Some(value.trim().parse().map_err(|e| CliError::Format {
            path: path.to_path_buf(),
            message: format!("metadata value for {} is not a count: {e}", key.trim()),
        })?);
        lines.next();
    }
    let population = population.ok_or_else(|| CliError::Format {
        path: path.to_path_buf(),
        message: "missing `# population=` metadata line".into(),
    })?;
    let initial_count = initial_count.ok_or_else(|| CliError::Format {
        path: path.to_path_buf(),
        message: "missing `# initial_count=` metadata line".into(),
    })?;

    match lines.next() {
        Some("date,cumulative") => {}
        other => {
            return Err(CliError::Format {
                path: path.to_path_buf(),
                message: format!("expected header `date,cumulative`, found {other:?}"),
            });
        }
    }

    let mut dates = Vec::new();
    let mut cumulative = Vec::new();
    let mut prev = initial_count;
    for (idx, line) in lines.enumerate() {
        let row = idx + 1;
        if line.is_empty() {
            continue;
        }
        let Some((date, count_field)) = line.split_once(',') else {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                row,
                column: 2,
                message: "expected two comma-separated fields".into(),
            });
        };
        let count: u64 = count_field.trim().parse().map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            row,
            column: 2,
            message: format!("invalid cumulative count {count_field:?}: {e}"),
        })?;
        if count < prev {
            return Err(CliError::NonMonotone {
                path: path.to_path_buf(),
                row,
                prev,
                current: count,
            });
        }
        if count > population {
            return Err(CliError::PopulationExceeded {
                path: path.to_path_buf(),
                row,
                count,
                population,
            });
        }
        dates.push(date.to_string());
        cumulative.push(count);
        prev = count;
    }
    if cumulative.is_empty() {
        return Err(CliError::Format {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    let series = EpidemicSeries::new(initial_count, cumulative, population)?;
    Ok(LoadedSeries { series, dates })
}

/// Writes a series in the format [`load_series`] reads. When no dates are
/// given, time indices stand in as labels.
pub fn write_series(path: &Path, series: &EpidemicSeries, dates: Option<&[String]>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# population={}", series.population());
    let _ = writeln!(out, "# initial_count={}", series.initial_count());
    let _ = writeln!(out, "date,cumulative");
    for (t, &c) in series.cumulative().iter().enumerate() {
        match dates {
            Some(d) => {
                let _ = writeln!(out, "{},{c}", d[t]);
            }
            None => {
                let _ = writeln!(out, "{t},{c}");
            }
        }
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Posterior predictive forecast in summary form: per-step mean and 95%
/// interval of future new cases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastArtifact {
    pub horizon: usize,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// The main output of a fit: the posterior summary plus everything needed
/// to reproduce the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryArtifact {
    /// Exact configuration the run used, including the seed.
    pub config: RunConfig,
    pub seed: u64,
    pub summary: PosteriorSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forecast: Option<ForecastArtifact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amape: Option<f64>,
}

/// True segmentation written next to simulated series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `"glc"` or `"sir"`.
    pub kind: String,
    /// Interior change points, 0-based observation indices.
    pub changepoints: Vec<u32>,
    /// 1-based segment label of every observation.
    pub labels: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub glc: Option<GlcScenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sir: Option<SirScenario>,
}

impl GroundTruth {
    pub fn from_glc(scenario: &GlcScenario, segmentation: &Segmentation) -> Self {
        GroundTruth {
            kind: "glc".into(),
            changepoints: segmentation.interior_changepoints(),
            labels: segmentation.labels().to_vec(),
            glc: Some(scenario.clone()),
            sir: None,
        }
    }

    pub fn from_sir(scenario: &SirScenario, segmentation: &Segmentation) -> Self {
        GroundTruth {
            kind: "sir".into(),
            changepoints: segmentation.interior_changepoints(),
            labels: segmentation.labels().to_vec(),
            glc: None,
            sir: Some(scenario.clone()),
        }
    }
}

/// Segmentation agreement scores written by evaluate mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsArtifact {
    pub ari: f64,
    pub mutual_information: f64,
    pub nvi: f64,
    pub f_measure: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: format!("cannot serialize: {e}"),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: format!("malformed JSON: {e}"),
    })
}

/// Writes one chain's retained samples as `iteration,m,log_posterior`,
/// with iteration numbering continuing from the burn-in.
pub fn write_trace_csv(path: &Path, trace: &ChainTrace, burn_in: usize) -> Result<()> {
    let mut out = String::from("iteration,m,log_posterior\n");
    for (i, sample) in trace.samples.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{}",
            burn_in + i,
            sample.segment_count(),
            sample.log_posterior
        );
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Writes the per-time-point table external plotting tools consume.
/// Observed rows leave the forecast columns empty and vice versa.
pub fn write_plotdata(
    path: &Path,
    series: &EpidemicSeries,
    fitted_mean: &[f64],
    ppi: &[f64],
    forecast: Option<&ForecastArtifact>,
) -> Result<()> {
    let mut out = String::from("time,observed,fitted-mean,ppi,forecast-mean,forecast-lo,forecast-hi\n");
    for (t, &observed) in series.new_cases().iter().enumerate() {
        let _ = writeln!(out, "{t},{observed},{},{},,,", fitted_mean[t], ppi[t]);
    }
    if let Some(fc) = forecast {
        let t0 = series.len();
        for i in 0..fc.horizon {
            let _ = writeln!(
                out,
                "{},,,,{},{},{}",
                t0 + i,
                fc.mean[i],
                fc.lower[i],
                fc.upper[i]
            );
        }
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Names the trace file for a chain: `trace.csv` for single-chain runs,
/// numbered files when several chains ran.
pub fn trace_file_name(chain_index: usize, chains: usize) -> String {
    if chains == 1 {
        "trace.csv".into()
    } else {
        format!("trace_chain_{}.csv", chain_index + 1)
    }
}

/// Names a simulated replicate file and its truth sidecar.
pub fn replicate_file_names(k: usize) -> (String, String) {
    (format!("replicate_{k:02}.csv"), format!("replicate_{k:02}_truth.json"))
}

pub fn in_dir(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
