use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use super::ComparativeError;
use crate::landscape::{Label, ProfileSet};

fn pairs(n: u64) -> f64 {
    (n as f64) * (n.saturating_sub(1) as f64) / 2.0
}

/// Adjusted Rand Index from the pair-counting contingency table. Noise is
/// its own label.
///
/// When both partitions are trivial (the chance-corrected denominator is
/// zero) the result is 1 for identical partitions and 0 otherwise.
pub fn adjusted_rand_index(a: &[Label], b: &[Label]) -> Result<f64, ComparativeError> {
    if a.len() != b.len() {
        return Err(ComparativeError::MismatchedUniverse(a.len(), b.len()));
    }
    let mut table: BTreeMap<(Label, Label), u64> = BTreeMap::new();
    let mut rows: BTreeMap<Label, u64> = BTreeMap::new();
    let mut cols: BTreeMap<Label, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let index: f64 = table.values().map(|&n| pairs(n)).sum();
    let sum_rows: f64 = rows.values().map(|&n| pairs(n)).sum();
    let sum_cols: f64 = cols.values().map(|&n| pairs(n)).sum();
    let total = pairs(a.len() as u64);
    let expected = if total > 0.0 {
        sum_rows * sum_cols / total
    } else {
        0.0
    };
    let max = (sum_rows + sum_cols) / 2.0;
    if max == expected {
        return Ok(if index == max { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// `|a ∩ b| / |a ∪ b|`; zero when both sets are empty.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// What an attractor's set is made of when matching across models.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum JaccardBasis {
    /// Users whose modal assignment is the attractor.
    #[default]
    MemberUsers,
    /// Beliefs with non-zero profile frequency.
    BeliefSupport,
}

/// Users grouped by modal label; index = attractor id.
pub fn member_sets(modal: &[Label], k: u32) -> Vec<BTreeSet<u32>> {
    let mut sets = vec![BTreeSet::new(); k as usize];
    for (user, label) in modal.iter().enumerate() {
        if let Some(a) = label {
            sets[*a as usize].insert(user as u32);
        }
    }
    sets
}

/// Belief support of each attractor profile; index = attractor id.
pub fn support_sets(profiles: &ProfileSet, k: u32) -> Vec<BTreeSet<u32>> {
    let mut sets = vec![BTreeSet::new(); k as usize];
    for p in &profiles.profiles {
        sets[p.attractor as usize] = p
            .frequency
            .iter()
            .enumerate()
            .filter(|(_, &f)| f > 0.0)
            .map(|(b, _)| b as u32)
            .collect();
    }
    sets
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JaccardMatch {
    pub a: u32,
    /// Best match in the other model; ties go to the lower id.
    pub best_b: Option<u32>,
    pub jaccard: f64,
    /// The attractor's own basis set was empty.
    pub empty_basis: bool,
}

/// Best Jaccard match in `sets_b` for every attractor in `sets_a`.
pub fn jaccard_match(sets_a: &[BTreeSet<u32>], sets_b: &[BTreeSet<u32>]) -> Vec<JaccardMatch> {
    sets_a
        .iter()
        .enumerate()
        .map(|(a, sa)| {
            let mut best: Option<(u32, f64)> = None;
            if !sa.is_empty() {
                for (b, sb) in sets_b.iter().enumerate() {
                    let j = jaccard(sa, sb);
                    if best.is_none_or(|(_, bj)| j > bj) {
                        best = Some((b as u32, j));
                    }
                }
            }
            JaccardMatch {
                a: a as u32,
                best_b: best.filter(|&(_, j)| j > 0.0).map(|(b, _)| b),
                jaccard: best.map_or(0.0, |(_, j)| j),
                empty_basis: sa.is_empty(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permuted_partition_is_one() {
        let a = [Some(0), Some(0), Some(1), Some(1), None, Some(2)];
        let b = [Some(5), Some(5), Some(3), Some(3), Some(9), None];
        assert_eq!(adjusted_rand_index(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn mismatched_lengths() {
        assert!(adjusted_rand_index(&[Some(0)], &[]).is_err());
    }

    #[test]
    fn trivial_partitions() {
        assert_eq!(
            adjusted_rand_index(&[Some(0); 4], &[Some(1); 4]).unwrap(),
            1.0
        );
        assert_eq!(adjusted_rand_index(&[], &[]).unwrap(), 1.0);
    }

    #[test]
    fn jaccard_sets() {
        let a: BTreeSet<u32> = [1, 2, 3].into();
        let b: BTreeSet<u32> = [3, 4].into();
        assert_eq!(jaccard(&a, &b), 0.25);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&a, &BTreeSet::new()), 0.0);
    }

    #[test]
    fn split_cluster_matches() {
        // A: {0..6}, {6..10}; B splits the first into {0..3}, {3..6}.
        let a = vec![(0..6).collect(), (6..10).collect()];
        let b = vec![(0..3).collect(), (3..6).collect(), (6..10).collect()];
        let m = jaccard_match(&a, &b);
        assert_eq!(m[0].best_b, Some(0));
        assert_eq!(m[0].jaccard, 0.5);
        assert_eq!(m[1].best_b, Some(2));
        assert_eq!(m[1].jaccard, 1.0);
    }

    #[test]
    fn empty_basis_is_flagged() {
        let a = vec![BTreeSet::new()];
        let b = vec![[1u32].into()];
        let m = jaccard_match(&a, &b);
        assert!(m[0].empty_basis);
        assert_eq!(m[0].jaccard, 0.0);
        assert_eq!(m[0].best_b, None);
    }
}
