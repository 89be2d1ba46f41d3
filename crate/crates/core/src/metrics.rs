//! Agreement metrics between a true and an estimated segmentation:
//! adjusted Rand index, mutual information, normalized variation of
//! information, and the clustering F-measure.
//!
//! Inputs are label vectors whose distinct values are exactly 1..=max;
//! labels need not be sorted, so arbitrary clusterings are accepted.
//! Indicator vectors convert to labels via [`labels_from_indicator`].
//! All logarithms are natural logs; ARI, NVI, and F do not depend on the
//! base, while the absolute scale of MI does.

use crate::error::{Error, Result};

/// Pair classification counts over all T(T−1)/2 unordered pairs of time
/// points: same segment in both partitions, same in truth only, same in
/// estimate only, and different in both.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairCounts {
    pub same_same: u64,
    pub same_diff: u64,
    pub diff_same: u64,
    pub diff_diff: u64,
}

impl PairCounts {
    pub fn from_labels(truth: &[u32], estimate: &[u32]) -> Result<Self> {
        Ok(ContingencyTable::from_labels(truth, estimate)?.pair_counts())
    }

    pub fn total(&self) -> u64 {
        self.same_same + self.same_diff + self.diff_same + self.diff_diff
    }
}

/// Joint label counts n_{mm′} with marginal segment sizes, the common
/// ground for all four metrics. Row sums recover truth sizes, column sums
/// recover estimate sizes, and the grand total is T.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    truth_sizes: Vec<u64>,
    estimate_sizes: Vec<u64>,
    joint: Vec<Vec<u64>>,
    total: u64,
}

fn max_label(labels: &[u32], side: &str) -> Result<usize> {
    let mut max = 0u32;
    for &label in labels {
        if label == 0 {
            return Err(Error::Invalid(format!("{side} labels must be positive integers")));
        }
        max = max.max(label);
    }
    let mut seen = vec![false; max as usize];
    for &label in labels {
        seen[label as usize - 1] = true;
    }
    if let Some(gap) = seen.iter().position(|&s| !s) {
        return Err(Error::Invalid(format!(
            "{side} labels must cover 1..={max} but {} never occurs",
            gap + 1
        )));
    }
    Ok(max as usize)
}

impl ContingencyTable {
    pub fn from_labels(truth: &[u32], estimate: &[u32]) -> Result<Self> {
        if truth.len() != estimate.len() {
            return Err(Error::Invalid(format!(
                "label vectors differ in length: {} vs {}",
                truth.len(),
                estimate.len()
            )));
        }
        if truth.is_empty() {
            return Err(Error::Invalid("label vectors must be nonempty".into()));
        }
        let rows = max_label(truth, "truth")?;
        let cols = max_label(estimate, "estimate")?;
        let mut joint = vec![vec![0u64; cols]; rows];
        for (&z, &zh) in truth.iter().zip(estimate) {
            joint[z as usize - 1][zh as usize - 1] += 1;
        }
        let truth_sizes: Vec<u64> = joint.iter().map(|row| row.iter().sum()).collect();
        let estimate_sizes: Vec<u64> =
            (0..cols).map(|c| joint.iter().map(|row| row[c]).sum()).collect();
        Ok(ContingencyTable { truth_sizes, estimate_sizes, joint, total: truth.len() as u64 })
    }

    pub fn truth_sizes(&self) -> &[u64] {
        &self.truth_sizes
    }

    pub fn estimate_sizes(&self) -> &[u64] {
        &self.estimate_sizes
    }

    pub fn joint(&self) -> &[Vec<u64>] {
        &self.joint
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Pair counts via the combinatorial identities: pairs agreeing in
    /// both partitions are Σ C(n_{mm′},2), pairs within one partition's
    /// segments are Σ C(n_m,2), and the rest follows from the C(T,2)
    /// total.
    pub fn pair_counts(&self) -> PairCounts {
        let choose2 = |n: u64| n * n.saturating_sub(1) / 2;
        let same_same: u64 = self.joint.iter().flatten().map(|&n| choose2(n)).sum();
        let truth_pairs: u64 = self.truth_sizes.iter().map(|&n| choose2(n)).sum();
        let estimate_pairs: u64 = self.estimate_sizes.iter().map(|&n| choose2(n)).sum();
        let total_pairs = choose2(self.total);
        // Adding same_same before the subtractions keeps every
        // intermediate value nonnegative in u64 arithmetic.
        PairCounts {
            same_same,
            same_diff: truth_pairs - same_same,
            diff_same: estimate_pairs - same_same,
            diff_diff: total_pairs + same_same - truth_pairs - estimate_pairs,
        }
    }

    /// (1/T)·Σ n_{mm′}·ln(n_{mm′}·T / (n_m·n̂_{m′})); empty cells
    /// contribute nothing.
    fn mutual_information(&self) -> f64 {
        let t = self.total as f64;
        let mut sum = 0.0;
        for (m, row) in self.joint.iter().enumerate() {
            for (mp, &n) in row.iter().enumerate() {
                if n > 0 {
                    let ratio =
                        n as f64 * t / (self.truth_sizes[m] as f64 * self.estimate_sizes[mp] as f64);
                    sum += n as f64 * ratio.ln();
                }
            }
        }
        sum / t
    }

    /// Entropy of one marginal, in nats: −Σ (n/T)·ln(n/T).
    fn entropy(sizes: &[u64], total: u64) -> f64 {
        let t = total as f64;
        sizes
            .iter()
            .filter(|&&n| n > 0)
            .map(|&n| {
                let p = n as f64 / t;
                -p * p.ln()
            })
            .sum()
    }
}

/// Adjusted Rand index. 1 for identical partitions, around 0 for
/// chance-level agreement, occasionally negative. A degenerate zero
/// denominator only arises when both partitions agree trivially, so it
/// reports 1.
pub fn ari(truth: &[u32], estimate: &[u32]) -> Result<f64> {
    let pairs = PairCounts::from_labels(truth, estimate)?;
    let (a, b, c, d) = (
        pairs.same_same as f64,
        pairs.same_diff as f64,
        pairs.diff_same as f64,
        pairs.diff_diff as f64,
    );
    let total = pairs.total() as f64;
    let chance = (a + b) * (a + c) + (c + d) * (b + d);
    let den = total * total - chance;
    if den == 0.0 {
        return Ok(1.0);
    }
    Ok((total * (a + d) - chance) / den)
}

/// Mutual information between the two partitions, in nats. Nonnegative;
/// 0 when either partition tells nothing about the other.
pub fn mutual_information(truth: &[u32], estimate: &[u32]) -> Result<f64> {
    Ok(ContingencyTable::from_labels(truth, estimate)?.mutual_information())
}

/// Normalized variation of information: (H(z) + H(ẑ) − 2·MI) / ln T,
/// which lies in [0,1] because VI ≤ ln T. 0 means identical partitions.
/// Series shorter than two points carry no partition information, so the
/// result is 0.
pub fn nvi(truth: &[u32], estimate: &[u32]) -> Result<f64> {
    let table = ContingencyTable::from_labels(truth, estimate)?;
    if table.total() < 2 {
        return Ok(0.0);
    }
    let h_truth = ContingencyTable::entropy(&table.truth_sizes, table.total);
    let h_estimate = ContingencyTable::entropy(&table.estimate_sizes, table.total);
    let vi = h_truth + h_estimate - 2.0 * table.mutual_information();
    // Entropy cancellation can leave a tiny negative residue.
    Ok((vi / (table.total as f64).ln()).clamp(0.0, 1.0))
}

/// Clustering F-measure: (2/T)·Σ_m n_m·max_{m′} n_{mm′}/(n_m + n̂_{m′}),
/// the size-weighted harmonic mean of precision and recall. 1 for
/// identical partitions.
pub fn f_measure(truth: &[u32], estimate: &[u32]) -> Result<f64> {
    let table = ContingencyTable::from_labels(truth, estimate)?;
    let mut sum = 0.0;
    for (m, row) in table.joint.iter().enumerate() {
        let n_m = table.truth_sizes[m] as f64;
        let best = row
            .iter()
            .enumerate()
            .map(|(mp, &n)| n as f64 / (n_m + table.estimate_sizes[mp] as f64))
            .fold(0.0f64, f64::max);
        sum += n_m * best;
    }
    Ok(2.0 * sum / table.total as f64)
}

/// Converts a 0/1 change-point indicator vector into segment labels by
/// cumulative sum. The first entry must be 1: it marks the start of
/// segment 1.
pub fn labels_from_indicator(indicator: &[u8]) -> Result<Vec<u32>> {
    if indicator.is_empty() {
        return Err(Error::Invalid("indicator vector must be nonempty".into()));
    }
    if indicator[0] != 1 {
        return Err(Error::Invalid("indicator vector must start with 1".into()));
    }
    if let Some(bad) = indicator.iter().find(|&&f| f > 1) {
        return Err(Error::Invalid(format!("indicator entries must be 0 or 1, got {bad}")));
    }
    let mut labels = Vec::with_capacity(indicator.len());
    let mut current = 0u32;
    for &flag in indicator {
        current += flag as u32;
        labels.push(current);
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Pair counts by scanning every unordered pair directly.
    fn naive_pair_counts(truth: &[u32], estimate: &[u32]) -> PairCounts {
        let mut counts = PairCounts { same_same: 0, same_diff: 0, diff_same: 0, diff_diff: 0 };
        for t in 0..truth.len() {
            for u in 0..t {
                match (truth[t] == truth[u], estimate[t] == estimate[u]) {
                    (true, true) => counts.same_same += 1,
                    (true, false) => counts.same_diff += 1,
                    (false, true) => counts.diff_same += 1,
                    (false, false) => counts.diff_diff += 1,
                }
            }
        }
        counts
    }

    /// Joint count by scanning the vectors once per (m, m′) cell.
    fn naive_joint(truth: &[u32], estimate: &[u32], m: u32, mp: u32) -> u64 {
        truth.iter().zip(estimate).filter(|(&z, &zh)| z == m && zh == mp).count() as u64
    }

    fn naive_mi(truth: &[u32], estimate: &[u32]) -> f64 {
        let t = truth.len() as f64;
        let rows = *truth.iter().max().unwrap();
        let cols = *estimate.iter().max().unwrap();
        let mut sum = 0.0;
        for m in 1..=rows {
            let n_m = truth.iter().filter(|&&z| z == m).count() as f64;
            for mp in 1..=cols {
                let n_mp = estimate.iter().filter(|&&z| z == mp).count() as f64;
                let joint = naive_joint(truth, estimate, m, mp) as f64;
                if joint > 0.0 {
                    sum += joint * (joint * t / (n_m * n_mp)).ln();
                }
            }
        }
        sum / t
    }

    fn naive_nvi(truth: &[u32], estimate: &[u32]) -> f64 {
        let t = truth.len() as f64;
        let marginal_term = |labels: &[u32]| -> f64 {
            let max = *labels.iter().max().unwrap();
            (1..=max)
                .map(|m| {
                    let n = labels.iter().filter(|&&z| z == m).count() as f64;
                    if n > 0.0 { n * (n / t).ln() } else { 0.0 }
                })
                .sum()
        };
        let bracket = marginal_term(truth)
            + marginal_term(estimate)
            + 2.0 * t * naive_mi(truth, estimate);
        (-bracket / (t * t.ln())).clamp(0.0, 1.0)
    }

    fn naive_f(truth: &[u32], estimate: &[u32]) -> f64 {
        let t = truth.len() as f64;
        let rows = *truth.iter().max().unwrap();
        let cols = *estimate.iter().max().unwrap();
        let mut sum = 0.0;
        for m in 1..=rows {
            let n_m = truth.iter().filter(|&&z| z == m).count() as f64;
            let best = (1..=cols)
                .map(|mp| {
                    let n_mp = estimate.iter().filter(|&&z| z == mp).count() as f64;
                    naive_joint(truth, estimate, m, mp) as f64 / (n_m + n_mp)
                })
                .fold(0.0f64, f64::max);
            sum += n_m * best;
        }
        2.0 * sum / t
    }

    /// Random labels canonicalized so distinct values are exactly 1..=max
    /// in order of first appearance.
    fn random_labels(rng: &mut impl Rng, len: usize, clusters: u32) -> Vec<u32> {
        let raw: Vec<u32> = (0..len).map(|_| rng.gen_range(1..=clusters)).collect();
        let mut mapping = Vec::new();
        raw.iter()
            .map(|&v| {
                if let Some(pos) = mapping.iter().position(|&m| m == v) {
                    pos as u32 + 1
                } else {
                    mapping.push(v);
                    mapping.len() as u32
                }
            })
            .collect()
    }

    #[test]
    fn identical_partitions_score_perfectly() {
        let labels = vec![1, 1, 1, 2, 2, 3, 3, 3, 3];
        assert_eq!(ari(&labels, &labels).unwrap(), 1.0);
        assert_eq!(f_measure(&labels, &labels).unwrap(), 1.0);
        assert!(nvi(&labels, &labels).unwrap().abs() < 1e-12);
    }

    #[test]
    fn equal_halves_share_one_bit_of_information() {
        let labels = vec![1, 1, 2, 2];
        let mi = mutual_information(&labels, &labels).unwrap();
        assert!((mi - 2.0f64.ln()).abs() < 1e-12, "MI {mi}");
    }

    #[test]
    fn single_cluster_pairs_share_nothing() {
        let ones = vec![1, 1, 1, 1, 1];
        assert_eq!(mutual_information(&ones, &ones).unwrap(), 0.0);
        assert_eq!(nvi(&ones, &ones).unwrap(), 0.0);
        assert_eq!(ari(&ones, &ones).unwrap(), 1.0);
    }

    #[test]
    fn collapsed_estimate_scores_hand_computed_values() {
        // truth (1,1,2,2) vs all-ones over the 6 pairs: a=2, b=0, c=4,
        // d=0, so ARI = (6·2 − 12)/(36 − 12) = 0. The F sum is
        // 2·(2/6) + 2·(2/6), giving 2/3. MI is 0: the estimate is
        // uninformative.
        let truth = vec![1, 1, 2, 2];
        let estimate = vec![1, 1, 1, 1];
        let pairs = PairCounts::from_labels(&truth, &estimate).unwrap();
        assert_eq!(
            pairs,
            PairCounts { same_same: 2, same_diff: 0, diff_same: 4, diff_diff: 0 }
        );
        assert_eq!(ari(&truth, &estimate).unwrap(), 0.0);
        assert!((f_measure(&truth, &estimate).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(mutual_information(&truth, &estimate).unwrap(), 0.0);
    }

    #[test]
    fn all_singletons_agree_with_themselves() {
        let labels: Vec<u32> = (1..=6).collect();
        assert_eq!(ari(&labels, &labels).unwrap(), 1.0);
        assert_eq!(nvi(&labels, &labels).unwrap(), 0.0);
    }

    #[test]
    fn contingency_table_marginals_add_up() {
        let truth = vec![1, 1, 2, 2, 2, 3];
        let estimate = vec![1, 2, 2, 2, 1, 1];
        let table = ContingencyTable::from_labels(&truth, &estimate).unwrap();
        assert_eq!(table.truth_sizes(), &[2, 3, 1]);
        assert_eq!(table.estimate_sizes(), &[3, 3]);
        let row_sums: Vec<u64> = table.joint().iter().map(|r| r.iter().sum()).collect();
        assert_eq!(row_sums, vec![2, 3, 1]);
        assert_eq!(table.total(), 6);
    }

    #[test]
    fn pair_counts_cover_every_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let len = rng.gen_range(2..60);
            let truth = random_labels(&mut rng, len, 4);
            let estimate = random_labels(&mut rng, len, 3);
            let pairs = PairCounts::from_labels(&truth, &estimate).unwrap();
            assert_eq!(pairs.total(), (len * (len - 1) / 2) as u64);
            assert_eq!(pairs, naive_pair_counts(&truth, &estimate));
        }
    }

    #[test]
    fn metrics_match_the_brute_force_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..40 {
            let len = rng.gen_range(2..=200);
            let truth_clusters = rng.gen_range(1..=6);
            let truth = random_labels(&mut rng, len, truth_clusters);
            let estimate_clusters = rng.gen_range(1..=6);
            let estimate = random_labels(&mut rng, len, estimate_clusters);

            let pairs = naive_pair_counts(&truth, &estimate);
            let (a, b, c, d) = (
                pairs.same_same as f64,
                pairs.same_diff as f64,
                pairs.diff_same as f64,
                pairs.diff_diff as f64,
            );
            let total = pairs.total() as f64;
            let chance = (a + b) * (a + c) + (c + d) * (b + d);
            let den = total * total - chance;
            let ari_oracle = if den == 0.0 { 1.0 } else { (total * (a + d) - chance) / den };

            assert!((ari(&truth, &estimate).unwrap() - ari_oracle).abs() < 1e-12);
            assert!(
                (mutual_information(&truth, &estimate).unwrap() - naive_mi(&truth, &estimate))
                    .abs()
                    < 1e-12
            );
            assert!((nvi(&truth, &estimate).unwrap() - naive_nvi(&truth, &estimate)).abs() < 1e-12);
            assert!(
                (f_measure(&truth, &estimate).unwrap() - naive_f(&truth, &estimate)).abs() < 1e-12
            );
        }
    }

    #[test]
    fn random_pairs_respect_the_metric_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let len = rng.gen_range(2..30);
            let truth_clusters = rng.gen_range(1..=5);
            let truth = random_labels(&mut rng, len, truth_clusters);
            let estimate_clusters = rng.gen_range(1..=5);
            let estimate = random_labels(&mut rng, len, estimate_clusters);
            let mi = mutual_information(&truth, &estimate).unwrap();
            assert!(mi >= 0.0, "negative MI {mi}");
            let v = nvi(&truth, &estimate).unwrap();
            assert!((0.0..=1.0).contains(&v), "NVI {v} out of range");
            let f = f_measure(&truth, &estimate).unwrap();
            assert!((0.0..=1.0).contains(&f), "F {f} out of range");
        }
    }

    #[test]
    fn symmetric_metrics_ignore_argument_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let len = rng.gen_range(2..40);
            let x = random_labels(&mut rng, len, 4);
            let y = random_labels(&mut rng, len, 3);
            // Pair counts are exact integers, so ARI is bitwise symmetric;
            // MI and NVI accumulate over transposed tables and can differ
            // in the last ulp.
            assert_eq!(ari(&x, &y).unwrap(), ari(&y, &x).unwrap());
            assert!((nvi(&x, &y).unwrap() - nvi(&y, &x).unwrap()).abs() < 1e-12);
            assert!(
                (mutual_information(&x, &y).unwrap() - mutual_information(&y, &x).unwrap()).abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn relabeling_either_side_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let len = rng.gen_range(2..40);
            let truth = random_labels(&mut rng, len, 3);
            let estimate = random_labels(&mut rng, len, 3);
            // Swap labels 1 and 2 on the truth side; the permuted vector
            // is still a valid clustering of the same partition.
            let permuted: Vec<u32> =
                truth.iter().map(|&z| match z { 1 => 2, 2 => 1, other => other }).collect();
            let canon = random_labels_canon(&permuted);
            assert!((ari(&truth, &estimate).unwrap() - ari(&canon, &estimate).unwrap()).abs() < 1e-12);
            assert!(
                (f_measure(&truth, &estimate).unwrap() - f_measure(&canon, &estimate).unwrap())
                    .abs()
                    < 1e-12
            );
            assert!(
                (mutual_information(&truth, &estimate).unwrap()
                    - mutual_information(&canon, &estimate).unwrap())
                .abs()
                    < 1e-12
            );
        }
    }

    fn random_labels_canon(labels: &[u32]) -> Vec<u32> {
        let mut mapping = Vec::new();
        labels
            .iter()
            .map(|&v| {
                if let Some(pos) = mapping.iter().position(|&m| m == v) {
                    pos as u32 + 1
                } else {
                    mapping.push(v);
                    mapping.len() as u32
                }
            })
            .collect()
    }

    #[test]
    fn exact_truth_beats_every_coarsening() {
        // For each contiguous partition of T ≤ 8, merging any adjacent
        // pair of segments must not raise F against the original truth.
        for t_len in 2..=8usize {
            for mask in 0..(1u32 << (t_len - 1)) {
                let mut indicator = vec![1u8];
                for bit in 0..(t_len - 1) {
                    indicator.push((mask >> bit & 1) as u8);
                }
                let truth = labels_from_indicator(&indicator).unwrap();
                let own = f_measure(&truth, &truth).unwrap();
                for drop in 1..t_len {
                    if indicator[drop] == 1 {
                        let mut coarse_ind = indicator.clone();
                        coarse_ind[drop] = 0;
                        let coarse = labels_from_indicator(&coarse_ind).unwrap();
                        let score = f_measure(&truth, &coarse).unwrap();
                        assert!(own >= score, "coarsening won: {own} < {score}");
                    }
                }
            }
        }
    }

    #[test]
    fn indicator_conversion_counts_segments() {
        let labels = labels_from_indicator(&[1, 0, 1, 1, 0]).unwrap();
        assert_eq!(labels, vec![1, 1, 2, 3, 3]);
        assert!(labels_from_indicator(&[]).is_err());
        assert!(labels_from_indicator(&[0, 1]).is_err());
        assert!(labels_from_indicator(&[1, 2]).is_err());
    }

    #[test]
    fn malformed_labels_are_rejected() {
        assert!(ari(&[1, 2], &[1, 2, 3]).is_err());
        assert!(ari(&[], &[]).is_err());
        assert!(ari(&[0, 1], &[1, 1]).is_err());
        assert!(ari(&[1, 3], &[1, 1]).is_err(), "gapped labels must fail");
        assert!(mutual_information(&[1, 1], &[2, 2]).is_err());
    }
}
