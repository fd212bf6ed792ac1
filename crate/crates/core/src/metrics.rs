//! Partition and labeling comparison metrics.
//!
//! [`rand_index`] measures pairwise agreement, [`variation_of_information`]
//! the information-theoretic distance in nats, and [`edge_prf`] the
//! precision/recall/F-measure of the cut class of two edge labelings. All
//! three are invariant under component relabeling where that makes sense.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Labeling, Partition};

/// The two partition scores reported together.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PartitionScore {
    pub rand_index: f64,
    pub variation_of_information: f64,
}

impl PartitionScore {
    pub fn compute(p1: &Partition, p2: &Partition) -> Result<Self> {
        Ok(Self {
            rand_index: rand_index(p1, p2)?,
            variation_of_information: variation_of_information(p1, p2)?,
        })
    }
}

fn check_lengths(p1: &Partition, p2: &Partition) -> Result<()> {
    if p1.len() != p2.len() {
        return Err(Error::LengthMismatch {
            expected: p1.len(),
            actual: p2.len(),
        });
    }
    Ok(())
}

/// Joint component-pair counts plus the two marginal count vectors. The
/// joint table is ordered so float sums over it are deterministic.
type Contingency = (BTreeMap<(u32, u32), u64>, Vec<u64>, Vec<u64>);

fn contingency(p1: &Partition, p2: &Partition) -> Contingency {
    let mut joint: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut rows = vec![0u64; p1.num_components()];
    let mut cols = vec![0u64; p2.num_components()];
    for (a, b) in p1.as_slice().iter().zip(p2.as_slice()) {
        *joint.entry((*a, *b)).or_insert(0) += 1;
        rows[*a as usize] += 1;
        cols[*b as usize] += 1;
    }
    (joint, rows, cols)
}

fn pairs(count: u64) -> u64 {
    count * count.saturating_sub(1) / 2
}

/// Fraction of node pairs on which the partitions agree: co-clustered in
/// both or separated in both. Needs at least two nodes.
pub fn rand_index(p1: &Partition, p2: &Partition) -> Result<f64> {
    check_lengths(p1, p2)?;
    let n = p1.len() as u64;
    assert!(n >= 2, "rand index needs at least two nodes");
    let (joint, rows, cols) = contingency(p1, p2);
    let together_both: u64 = joint.values().map(|&c| pairs(c)).sum();
    let together_first: u64 = rows.iter().map(|&c| pairs(c)).sum();
    let together_second: u64 = cols.iter().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    // Pairs together in one partition but not the other disagree; the rest
    // agree.
    let disagreements = (together_first - together_both) + (together_second - together_both);
    Ok((total - disagreements) as f64 / total as f64)
}

/// `H(p1) + H(p2) - 2 I(p1; p2)` in nats, from the contingency table.
/// Zero iff the partitions agree up to relabeling; at most `ln n`.
pub fn variation_of_information(p1: &Partition, p2: &Partition) -> Result<f64> {
    check_lengths(p1, p2)?;
    let n = p1.len() as f64;
    let (joint, rows, cols) = contingency(p1, p2);
    let entropy = |counts: &[u64]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h1 = entropy(&rows);
    let h2 = entropy(&cols);
    let mut mutual = 0.0;
    for (&(a, b), &c) in &joint {
        let p = c as f64 / n;
        let pa = rows[a as usize] as f64 / n;
        let pb = cols[b as usize] as f64 / n;
        mutual += p * (p / (pa * pb)).ln();
    }
    Ok((h1 + h2 - 2.0 * mutual).max(0.0))
}

/// Precision, recall, and F-measure of the cut class (label 1). With no
/// predicted cuts the precision is 1 by convention; with no true cuts the
/// recall is 1; an undefined F-measure (both terms zero) is 0.
pub fn edge_prf(predicted: &Labeling, truth: &Labeling) -> Result<(f64, f64, f64)> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    let mut true_positive = 0u64;
    let mut false_positive = 0u64;
    let mut false_negative = 0u64;
    for (p, t) in predicted.iter().zip(truth.iter()) {
        match (p, t) {
            (1, 1) => true_positive += 1,
            (1, 0) => false_positive += 1,
            (0, 1) => false_negative += 1,
            _ => {}
        }
    }
    let precision = if true_positive + false_positive == 0 {
        1.0
    } else {
        true_positive as f64 / (true_positive + false_positive) as f64
    };
    let recall = if true_positive + false_negative == 0 {
        1.0
    } else {
        true_positive as f64 / (true_positive + false_negative) as f64
    };
    let f_measure = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok((precision, recall, f_measure))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rand_index_cases() {
        let p = Partition::new(vec![0, 0, 1, 1]);
        assert_eq!(rand_index(&p, &p).unwrap(), 1.0);

        let singles = Partition::singletons(3);
        let merged = Partition::new(vec![0, 0, 0]);
        assert_eq!(rand_index(&singles, &merged).unwrap(), 0.0);

        // {a,b}{c,d} vs {a,b,c}{d}: the pair (a,b) agrees together, (a,d)
        // and (b,d) agree apart; (a,c), (b,c), (c,d) disagree.
        let left = Partition::new(vec![0, 0, 1, 1]);
        let right = Partition::new(vec![0, 0, 0, 1]);
        assert!((rand_index(&left, &right).unwrap() - 3.0 / 6.0).abs() < 1e-12);
    }

    // Oracle: scan all node pairs directly.
    fn rand_index_by_pairs(p1: &Partition, p2: &Partition) -> f64 {
        let n = p1.len();
        let mut agree = 0u64;
        for i in 0..n {
            for j in (i + 1)..n {
                let same1 = p1.get(i) == p1.get(j);
                let same2 = p2.get(i) == p2.get(j);
                if same1 == same2 {
                    agree += 1;
                }
            }
        }
        agree as f64 / (n * (n - 1) / 2) as f64
    }

    #[test]
    fn rand_index_matches_pair_enumeration() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let n = rng.gen_range(2..40);
            let k = rng.gen_range(1..6u32);
            let p1 = Partition::from_raw(&(0..n).map(|_| rng.gen_range(0..k)).collect::<Vec<_>>());
            let p2 = Partition::from_raw(&(0..n).map(|_| rng.gen_range(0..k)).collect::<Vec<_>>());
            let fast = rand_index(&p1, &p2).unwrap();
            assert!((fast - rand_index_by_pairs(&p1, &p2)).abs() < 1e-12);
        }
    }

    #[test]
    fn variation_of_information_cases() {
        let p = Partition::new(vec![0, 1, 0, 2]);
        assert_eq!(variation_of_information(&p, &p).unwrap(), 0.0);

        let singles = Partition::singletons(3);
        let merged = Partition::new(vec![0, 0, 0]);
        let vi = variation_of_information(&singles, &merged).unwrap();
        assert!((vi - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn variation_of_information_is_symmetric_and_bounded() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let n = rng.gen_range(2..30);
            let p1 =
                Partition::from_raw(&(0..n).map(|_| rng.gen_range(0..5u32)).collect::<Vec<_>>());
            let p2 =
                Partition::from_raw(&(0..n).map(|_| rng.gen_range(0..5u32)).collect::<Vec<_>>());
            let ab = variation_of_information(&p1, &p2).unwrap();
            let ba = variation_of_information(&p2, &p1).unwrap();
            assert!((ab - ba).abs() < 1e-12);
            assert!(ab >= 0.0);
            assert!(ab <= (n as f64).ln() + 1e-12);
        }
    }

    #[test]
    fn metrics_ignore_component_labels() {
        let p1 = Partition::new(vec![0, 0, 1, 2]);
        let relabeled = Partition::from_raw(&[9, 9, 4, 7]);
        let other = Partition::new(vec![0, 1, 1, 0]);
        assert_eq!(
            rand_index(&p1, &other).unwrap(),
            rand_index(&relabeled, &other).unwrap()
        );
        assert_eq!(
            variation_of_information(&p1, &other).unwrap(),
            variation_of_information(&relabeled, &other).unwrap()
        );
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let p1 = Partition::new(vec![0, 1]);
        let p2 = Partition::new(vec![0, 1, 1]);
        assert!(rand_index(&p1, &p2).is_err());
        assert!(variation_of_information(&p1, &p2).is_err());
        assert!(edge_prf(&Labeling::new(vec![1]), &Labeling::new(vec![1, 0])).is_err());
    }

    #[test]
    fn edge_prf_cases() {
        let truth = Labeling::new(vec![1, 0, 1, 0]);
        assert_eq!(edge_prf(&truth, &truth).unwrap(), (1.0, 1.0, 1.0));

        let all_join = Labeling::all_join(4);
        assert_eq!(edge_prf(&all_join, &truth).unwrap(), (1.0, 0.0, 0.0));

        let predicted = Labeling::new(vec![1, 1, 0, 0]);
        assert_eq!(edge_prf(&predicted, &truth).unwrap(), (0.5, 0.5, 0.5));

        // No true cuts: recall defaults to 1.
        let no_cuts = Labeling::all_join(4);
        let (precision, recall, f) = edge_prf(&predicted, &no_cuts).unwrap();
        assert_eq!(recall, 1.0);
        assert_eq!(precision, 0.0);
        assert_eq!(f, 0.0);
    }
}
