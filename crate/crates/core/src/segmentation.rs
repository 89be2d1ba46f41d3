//! Change-point structure over a series of T time points.
//!
//! A segmentation is a binary indicator vector δ of length T with δ₀ = 1.
//! Positions with δ_t = 1 are change points; the cumulative sum of δ gives
//! the 1-based segment label z_t of every time point, and M = Σδ_t is the
//! number of segments.
//!
//! A minimum-gap rule with parameter Q keeps segments identifiable: change
//! points must sit in the free window [Q, T−Q] (0-based, inclusive) and any
//! two change points must be at least Q apart. Effectively every segment
//! covers at least Q time points. Constructors enforce only the structural
//! requirement δ₀ = 1; the gap rule is checked separately so that densities
//! can report violations in-band as −∞.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::EpidemicSeries;

/// Binary change-point indicator with derived labels and segment count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    indicator: Vec<u8>,
    labels: Vec<u32>,
    segment_count: usize,
}

/// Inclusive window `[q, t_len − q]` of positions allowed to hold change
/// points, or `None` when the series is too short for any (T < 2Q).
pub fn free_window(t_len: usize, q_gap: usize) -> Option<(usize, usize)> {
    if q_gap == 0 || t_len < 2 * q_gap {
        None
    } else {
        Some((q_gap, t_len - q_gap))
    }
}

impl Segmentation {
    /// Builds from a raw indicator vector. Entries must be 0 or 1 and the
    /// first entry must be 1; the gap rule is deliberately not checked here.
    pub fn new(indicator: Vec<u8>) -> Result<Self> {
        if indicator.is_empty() {
            return Err(Error::Invalid("indicator vector must be nonempty".into()));
        }
        if indicator[0] != 1 {
            return Err(Error::Invalid("first indicator entry must be 1".into()));
        }
        if let Some(t) = indicator.iter().position(|&d| d > 1) {
            return Err(Error::Invalid(format!("indicator entry at index {t} is not binary")));
        }
        let mut labels = Vec::with_capacity(indicator.len());
        let mut running = 0u32;
        for &d in &indicator {
            running += u32::from(d);
            labels.push(running);
        }
        let segment_count = running as usize;
        Ok(Segmentation { indicator, labels, segment_count })
    }

    /// The one-segment model: δ = (1, 0, …, 0).
    pub fn single_segment(t_len: usize) -> Result<Self> {
        let mut indicator = vec![0u8; t_len];
        if let Some(first) = indicator.first_mut() {
            *first = 1;
        }
        Segmentation::new(indicator)
    }

    /// Builds from the sorted list of change-point positions, which must
    /// start with 0.
    pub fn from_changepoints(t_len: usize, changepoints: &[u32]) -> Result<Self> {
        let mut indicator = vec![0u8; t_len];
        for &cp in changepoints {
            let t = cp as usize;
            if t >= t_len {
                return Err(Error::Invalid(format!(
                    "change point {t} out of range for series length {t_len}"
                )));
            }
            if indicator[t] == 1 {
                return Err(Error::Invalid(format!("duplicate change point {t}")));
            }
            indicator[t] = 1;
        }
        Segmentation::new(indicator)
    }

    pub fn len(&self) -> usize {
        self.indicator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicator.is_empty()
    }

    pub fn indicator(&self) -> &[u8] {
        &self.indicator
    }

    /// 1-based segment label of every time point (cumulative sum of δ).
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Number of segments M.
    pub fn segment_count(&self) -> usize {
        self.segment_count
    }

    /// Positions with δ_t = 1 in increasing order; always starts with 0.
    pub fn changepoints(&self) -> Vec<u32> {
        self.indicator
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 1)
            .map(|(t, _)| t as u32)
            .collect()
    }

    /// Change points strictly after the origin, i.e. the segment boundaries.
    pub fn interior_changepoints(&self) -> Vec<u32> {
        self.changepoints().into_iter().filter(|&t| t > 0).collect()
    }

    /// Half-open index ranges `[start, end)` of the M segments, in order.
    pub fn segment_bounds(&self) -> Vec<(usize, usize)> {
        let cps = self.changepoints();
        let mut bounds = Vec::with_capacity(cps.len());
        for (i, &start) in cps.iter().enumerate() {
            let end = cps.get(i + 1).map_or(self.len(), |&next| next as usize);
            bounds.push((start as usize, end));
        }
        bounds
    }

    /// Largest cumulative count among the time points of 1-based segment m.
    /// By monotonicity this is the count at the segment's last time point.
    pub fn segment_max_cumulative(&self, series: &EpidemicSeries, m: usize) -> Result<u64> {
        if m == 0 || m > self.segment_count {
            return Err(Error::Invalid(format!(
                "segment index {m} out of range 1..={}",
                self.segment_count
            )));
        }
        if series.len() != self.len() {
            return Err(Error::LengthMismatch(format!(
                "series length {} does not match segmentation length {}",
                series.len(),
                self.len()
            )));
        }
        let (_, end) = self.segment_bounds()[m - 1];
        Ok(series.cumulative()[end - 1])
    }

    /// Change-point positions as indices, for callers that work with raw
    /// position lists.
    pub(crate) fn changepoint_positions(&self) -> Vec<usize> {
        self.indicator
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 1)
            .map(|(t, _)| t)
            .collect()
    }

    /// Whether every change point lies inside the free window and any two
    /// change points are at least `q_gap` apart.
    pub fn satisfies_gap(&self, q_gap: usize) -> bool {
        cps_gap_ok(self.len(), &self.changepoint_positions(), q_gap)
    }
}

/// Gap-rule check on a sorted change-point position list (first entry 0):
/// interior positions must lie inside the free window and consecutive
/// positions must be at least `q_gap` apart.
pub(crate) fn cps_gap_ok(t_len: usize, cps: &[usize], q_gap: usize) -> bool {
    if cps.len() > 1 {
        let Some((lo, hi)) = free_window(t_len, q_gap) else {
            return false;
        };
        for &t in &cps[1..] {
            if t < lo || t > hi {
                return false;
            }
        }
    }
    for pair in cps.windows(2) {
        if pair[1] < pair[0] + q_gap {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_cumulative_sums() {
        let mut ind = vec![0u8; 20];
        ind[0] = 1;
        ind[7] = 1;
        ind[14] = 1;
        let seg = Segmentation::new(ind).unwrap();
        assert_eq!(seg.segment_count(), 3);
        assert_eq!(seg.labels()[0], 1);
        assert_eq!(seg.labels()[6], 1);
        assert_eq!(seg.labels()[7], 2);
        assert_eq!(seg.labels()[13], 2);
        assert_eq!(seg.labels()[19], 3);
        assert_eq!(seg.changepoints(), vec![0, 7, 14]);
        assert_eq!(seg.interior_changepoints(), vec![7, 14]);
        assert_eq!(seg.segment_bounds(), vec![(0, 7), (7, 14), (14, 20)]);
    }

    #[test]
    fn round_trips_through_changepoints() {
        let seg = Segmentation::from_changepoints(30, &[0, 9, 21]).unwrap();
        let back = Segmentation::from_changepoints(30, &seg.changepoints()).unwrap();
        assert_eq!(seg, back);
    }

    #[test]
    fn structural_validation() {
        assert!(Segmentation::new(vec![]).is_err());
        assert!(Segmentation::new(vec![0, 1]).is_err());
        assert!(Segmentation::new(vec![1, 2]).is_err());
        assert!(Segmentation::from_changepoints(10, &[0, 10]).is_err());
        assert!(Segmentation::from_changepoints(10, &[0, 3, 3]).is_err());
    }

    #[test]
    fn gap_rule() {
        // T=20, Q=7: free window is [7, 13].
        let ok = Segmentation::from_changepoints(20, &[0, 7]).unwrap();
        assert!(ok.satisfies_gap(7));
        let at_edge = Segmentation::from_changepoints(20, &[0, 13]).unwrap();
        assert!(at_edge.satisfies_gap(7));
        let too_early = Segmentation::from_changepoints(20, &[0, 6]).unwrap();
        assert!(!too_early.satisfies_gap(7));
        let too_late = Segmentation::from_changepoints(20, &[0, 14]).unwrap();
        assert!(!too_late.satisfies_gap(7));
        // Two interior points closer than Q.
        let crowded = Segmentation::from_changepoints(30, &[0, 8, 12]).unwrap();
        assert!(!crowded.satisfies_gap(7));
        let spaced = Segmentation::from_changepoints(30, &[0, 8, 15]).unwrap();
        assert!(spaced.satisfies_gap(7));
        // Single segment always satisfies the rule.
        assert!(Segmentation::single_segment(5).unwrap().satisfies_gap(7));
    }

    #[test]
    fn free_window_bounds() {
        assert_eq!(free_window(20, 7), Some((7, 13)));
        assert_eq!(free_window(14, 7), Some((7, 7)));
        assert_eq!(free_window(13, 7), None);
        assert_eq!(free_window(10, 0), None);
    }

    #[test]
    fn segment_max_cumulative_is_last_count() {
        let series = EpidemicSeries::new(0, (1..=20).collect(), 1000).unwrap();
        let seg = Segmentation::from_changepoints(20, &[0, 7, 14]).unwrap();
        assert_eq!(seg.segment_max_cumulative(&series, 1).unwrap(), 7);
        assert_eq!(seg.segment_max_cumulative(&series, 2).unwrap(), 14);
        assert_eq!(seg.segment_max_cumulative(&series, 3).unwrap(), 20);
        assert!(seg.segment_max_cumulative(&series, 0).is_err());
        assert!(seg.segment_max_cumulative(&series, 4).is_err());
    }
}
