//! Retained MCMC samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SegmentParams;
use crate::segmentation::Segmentation;

/// One retained state of a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    /// Change-point positions in increasing order; the first is always 0,
    /// so the segment count is the length of this list.
    pub changepoints: Vec<u32>,
    /// Parameter triples in segment order.
    pub params: Vec<SegmentParams>,
    pub dispersion: f64,
    /// Data log-likelihood of the state (0 when the likelihood is disabled
    /// by a test hook).
    pub log_lik: f64,
    /// Unnormalized Bernoulli log-mass of the indicator over the free
    /// positions.
    pub log_prior_indicator: f64,
    /// The chain's stationary log-target at this state, up to an additive
    /// constant. Fixed-M chains record likelihood plus indicator, parameter,
    /// and dispersion priors; variable-M chains additionally include the
    /// segment-count prior and the indicator normalizer ln Z_M.
    pub log_posterior: f64,
}

impl TraceSample {
    pub fn segment_count(&self) -> usize {
        self.changepoints.len()
    }

    /// Rebuilds the segmentation over a series of `t_len` points.
    pub fn segmentation(&self, t_len: usize) -> Result<Segmentation> {
        Segmentation::from_changepoints(t_len, &self.changepoints)
    }
}

/// Post-burn-in samples of one chain (or of several concatenated chains)
/// over a series of `series_len` time points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub series_len: usize,
    pub samples: Vec<TraceSample>,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Merges several chains over the same series into one trace, in the
    /// order given. Chain identity is deliberately dropped; summaries pool
    /// samples.
    pub fn concat(traces: Vec<ChainTrace>) -> Result<ChainTrace> {
        let mut iter = traces.into_iter();
        let Some(mut merged) = iter.next() else {
            return Err(Error::EmptyTrace);
        };
        for t in iter {
            if t.series_len != merged.series_len {
                return Err(Error::LengthMismatch(format!(
                    "cannot concatenate traces over series of lengths {} and {}",
                    merged.series_len, t.series_len
                )));
            }
            merged.samples.extend(t.samples);
        }
        Ok(merged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(cps: &[u32]) -> TraceSample {
        TraceSample {
            changepoints: cps.to_vec(),
            params: vec![
                SegmentParams { final_size: 100.0, growth_rate: 0.1, scaling: 0.9 };
                cps.len()
            ],
            dispersion: 1.0,
            log_lik: -10.0,
            log_prior_indicator: -0.1,
            log_posterior: -10.1,
        }
    }

    #[test]
    fn concat_preserves_order_and_checks_length() {
        let a = ChainTrace { series_len: 30, samples: vec![sample(&[0]), sample(&[0, 9])] };
        let b = ChainTrace { series_len: 30, samples: vec![sample(&[0, 12])] };
        let merged = ChainTrace::concat(vec![a.clone(), b]).unwrap();
        assert_eq!(merged.len(), 3);
        assert_eq!(merged.samples[2].changepoints, vec![0, 12]);

        let short = ChainTrace { series_len: 20, samples: vec![sample(&[0])] };
        assert!(ChainTrace::concat(vec![a, short]).is_err());
        assert!(ChainTrace::concat(vec![]).is_err());
    }

    #[test]
    fn sample_rebuilds_segmentation() {
        let s = sample(&[0, 9]);
        assert_eq!(s.segment_count(), 2);
        let seg = s.segmentation(30).unwrap();
        assert_eq!(seg.segment_count(), 2);
        assert_eq!(seg.changepoints(), vec![0, 9]);
    }
}
