//! Observed cumulative case series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cumulative confirmed-case counts at equally spaced time points, together
/// with the count just before the series starts and the population cap.
///
/// Time is 0-based: `cumulative()[t]` is the count at time point t, and the
/// count one step earlier is `prev_cumulative(t)` (which is `initial_count`
/// at t = 0). New cases are derived, never stored independently.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpidemicSeries {
    initial_count: u64,
    cumulative: Vec<u64>,
    new_cases: Vec<u64>,
    population: u64,
}

impl EpidemicSeries {
    /// Validates monotonicity and the population bound, and derives new cases.
    pub fn new(initial_count: u64, cumulative: Vec<u64>, population: u64) -> Result<Self> {
        if cumulative.is_empty() {
            return Err(Error::Invalid("series must contain at least one time point".into()));
        }
        if population == 0 {
            return Err(Error::Invalid("population must be positive".into()));
        }
        let mut prev = initial_count;
        let mut new_cases = Vec::with_capacity(cumulative.len());
        for (t, &c) in cumulative.iter().enumerate() {
            if c < prev {
                return Err(Error::Invalid(format!(
                    "cumulative count decreases at index {t}: {c} < {prev}"
                )));
            }
            if c > population {
                return Err(Error::Invalid(format!(
                    "cumulative count {c} at index {t} exceeds population {population}"
                )));
            }
            new_cases.push(c - prev);
            prev = c;
        }
        Ok(EpidemicSeries { initial_count, cumulative, new_cases, population })
    }

    /// Number of time points T.
    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn initial_count(&self) -> u64 {
        self.initial_count
    }

    pub fn cumulative(&self) -> &[u64] {
        &self.cumulative
    }

    /// Per-time-point new cases, `cumulative[t] - cumulative[t-1]`.
    pub fn new_cases(&self) -> &[u64] {
        &self.new_cases
    }

    pub fn population(&self) -> u64 {
        self.population
    }

    /// Cumulative count one step before time point t.
    pub fn prev_cumulative(&self, t: usize) -> u64 {
        if t == 0 {
            self.initial_count
        } else {
            self.cumulative[t - 1]
        }
    }

    /// Largest cumulative count in the series (the last one, by monotonicity).
    pub fn max_cumulative(&self) -> u64 {
        *self.cumulative.last().expect("series is nonempty")
    }

    /// Restriction to the first `len` time points.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.len() {
            return Err(Error::Invalid(format!(
                "cannot truncate a series of length {} to {len}",
                self.len()
            )));
        }
        EpidemicSeries::new(self.initial_count, self.cumulative[..len].to_vec(), self.population)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derives_new_cases_from_initial_count() {
        let s = EpidemicSeries::new(100, vec![112, 112, 130], 1000).unwrap();
        assert_eq!(s.new_cases(), &[12, 0, 18]);
        assert_eq!(s.prev_cumulative(0), 100);
        assert_eq!(s.prev_cumulative(2), 112);
        assert_eq!(s.max_cumulative(), 130);
    }

    #[test]
    fn rejects_nonmonotone_and_overflowing_counts() {
        let err = EpidemicSeries::new(0, vec![5, 3], 1000).unwrap_err();
        assert!(err.to_string().contains("index 1"));
        assert!(EpidemicSeries::new(0, vec![5, 2000], 1000).is_err());
        assert!(EpidemicSeries::new(0, vec![], 1000).is_err());
    }

    #[test]
    fn initial_count_above_first_point_is_rejected() {
        assert!(EpidemicSeries::new(10, vec![5], 1000).is_err());
    }

    #[test]
    fn truncation_preserves_metadata() {
        let s = EpidemicSeries::new(1, vec![2, 3, 4], 50).unwrap();
        let t = s.truncated(2).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.initial_count(), 1);
        assert_eq!(t.population(), 50);
        assert!(s.truncated(0).is_err());
        assert!(s.truncated(4).is_err());
    }
}
