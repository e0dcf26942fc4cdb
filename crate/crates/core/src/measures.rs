//! Attractor homogeneity and community bias.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::datamodel::{Community, WeeklyCounts};
use crate::landscape::{AssignmentTable, ProfileSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error("community {0} has no events")]
    EmptyCommunity(Community),
}

/// Activity of one attractor in one week.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AttractorWeekCell {
    /// Unique active users per community.
    pub active_users: [u32; 2],
    /// Events per community.
    pub tweets: [u64; 2],
}

/// Per (attractor, week) population counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeeklyAttractorCounts {
    pub k: u32,
    pub n_weeks: u32,
    cells: Vec<AttractorWeekCell>,
}

impl WeeklyAttractorCounts {
    /// Counts every active user-week under its assigned attractor. Noise and
    /// unassigned user-weeks are skipped.
    pub fn from_assignments(assignments: &AssignmentTable, counts: &WeeklyCounts) -> Self {
        let k = assignments.k;
        let n_weeks = counts.n_weeks();
        let mut cells = vec![AttractorWeekCell::default(); k as usize * n_weeks as usize];
        for ((u, w), total) in counts.user_week_totals() {
            if let Some(Some(a)) = assignments.get(u, w) {
                let c = counts.users().community(u).index();
                let cell = &mut cells[a as usize * n_weeks as usize + w as usize];
                cell.active_users[c] += 1;
                cell.tweets[c] += total;
            }
        }
        Self { k, n_weeks, cells }
    }

    pub fn get(&self, attractor: u32, week: u32) -> AttractorWeekCell {
        self.cells[attractor as usize * self.n_weeks as usize + week as usize]
    }
}

/// `|a - b| / (a + b)`, undefined when both are zero.
pub fn homogeneity(a: f64, b: f64) -> Option<f64> {
    let total = a + b;
    (total > 0.0).then(|| (a - b).abs() / total)
}

/// Which per-community quantity homogeneity compares.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HomogeneityBasis {
    /// Unique active users (the defining formula).
    #[default]
    UniqueUsers,
    /// Event volume.
    TweetVolume,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomogeneityRecord {
    pub attractor: u32,
    pub week: u32,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneityTable {
    pub k: u32,
    /// Defined cells in (attractor, week) order.
    pub records: Vec<HomogeneityRecord>,
    /// Cells with no activity from either community.
    pub undefined: Vec<(u32, u32)>,
}

pub fn weekly_homogeneity(
    counts: &WeeklyAttractorCounts,
    basis: HomogeneityBasis,
) -> HomogeneityTable {
    let mut records = Vec::new();
    let mut undefined = Vec::new();
    for a in 0..counts.k {
        for w in 0..counts.n_weeks {
            let cell = counts.get(a, w);
            let [x, y] = match basis {
                HomogeneityBasis::UniqueUsers => cell.active_users.map(f64::from),
                HomogeneityBasis::TweetVolume => cell.tweets.map(|t| t as f64),
            };
            match homogeneity(x, y) {
                Some(h) => records.push(HomogeneityRecord {
                    attractor: a,
                    week: w,
                    h,
                }),
                None => undefined.push((a, w)),
            }
        }
    }
    HomogeneityTable {
        k: counts.k,
        records,
        undefined,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneityRanking {
    /// `(attractor, mean H)`, most heterogeneous first.
    pub ranked: Vec<(u32, f64)>,
    /// Attractors with no defined week before the cutoff.
    pub excluded: Vec<u32>,
}

/// Unweighted mean of defined H over weeks `< up_to_week`, ascending.
pub fn mean_homogeneity_ranking(table: &HomogeneityTable, up_to_week: u32) -> HomogeneityRanking {
    let mut sums = vec![(0.0f64, 0u32); table.k as usize];
    for r in table.records.iter().filter(|r| r.week < up_to_week) {
        let s = &mut sums[r.attractor as usize];
        s.0 += r.h;
        s.1 += 1;
    }
    let mut ranked = Vec::new();
    let mut excluded = Vec::new();
    for (a, &(sum, n)) in sums.iter().enumerate() {
        if n == 0 {
            excluded.push(a as u32);
        } else {
            ranked.push((a as u32, sum / f64::from(n)));
        }
    }
    ranked.sort_by(|x, y| {
        x.1.partial_cmp(&y.1)
            .unwrap_or(Ordering::Equal)
            .then(x.0.cmp(&y.0))
    });
    HomogeneityRanking { ranked, excluded }
}

/// `p_a / (p_a + p_b)`, undefined when both are zero.
pub fn bias_score(p_a: f64, p_b: f64) -> Option<f64> {
    let total = p_a + p_b;
    (total > 0.0).then(|| p_a / total)
}

/// Community bias of one belief cluster. 1 means community A only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeliefBias {
    pub belief: u32,
    /// Share of community A's events expressing the belief.
    pub p_a: f64,
    /// Share of community B's events expressing the belief.
    pub p_b: f64,
    pub bias: f64,
}

/// Per-belief bias from event proportions. Beliefs neither community
/// expressed are absent.
pub fn belief_bias(counts: &WeeklyCounts) -> Result<Vec<BeliefBias>, MeasureError> {
    let totals = counts.community_totals();
    for c in Community::ALL {
        if totals[c.index()] == 0 {
            return Err(MeasureError::EmptyCommunity(c));
        }
    }
    let mut per_belief: BTreeMap<u32, [u64; 2]> = BTreeMap::new();
    for (u, _, b, n) in counts.cells() {
        per_belief.entry(b).or_insert([0; 2])[counts.users().community(u).index()] += u64::from(n);
    }
    Ok(per_belief
        .into_iter()
        .filter_map(|(belief, [a, b])| {
            let p_a = a as f64 / totals[0] as f64;
            let p_b = b as f64 / totals[1] as f64;
            bias_score(p_a, p_b).map(|bias| BeliefBias {
                belief,
                p_a,
                p_b,
                bias,
            })
        })
        .collect())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AttractorBiasTable {
    pub bias: BTreeMap<u32, f64>,
    /// Profile mass that sat on beliefs without a defined bias.
    pub dropped_mass: BTreeMap<u32, f64>,
}

/// Profile-weighted mean of per-belief bias. Mass on beliefs without a bias
/// is dropped and the remainder renormalized.
pub fn attractor_bias(profiles: &ProfileSet, biases: &[BeliefBias]) -> AttractorBiasTable {
    let lookup: BTreeMap<u32, f64> = biases.iter().map(|b| (b.belief, b.bias)).collect();
    let mut out = AttractorBiasTable::default();
    for p in &profiles.profiles {
        let mut weighted = 0.0;
        let mut mass = 0.0;
        let mut dropped = 0.0;
        for (b, &w) in p.frequency.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            match lookup.get(&(b as u32)) {
                Some(&bias) => {
                    weighted += w * bias;
                    mass += w;
                }
                None => dropped += w,
            }
        }
        if dropped > 0.0 {
            out.dropped_mass.insert(p.attractor, dropped);
        }
        if mass > 0.0 {
            out.bias.insert(p.attractor, weighted / mass);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::AttractorProfile;

    #[test]
    fn homogeneity_examples() {
        assert_eq!(homogeneity(10.0, 10.0), Some(0.0));
        assert_eq!(homogeneity(5.0, 0.0), Some(1.0));
        assert_eq!(homogeneity(12.0, 8.0), Some(0.2));
        assert_eq!(homogeneity(0.0, 0.0), None);
    }

    fn table(hs: &[(u32, u32, f64)], k: u32) -> HomogeneityTable {
        HomogeneityTable {
            k,
            records: hs
                .iter()
                .map(|&(attractor, week, h)| HomogeneityRecord { attractor, week, h })
                .collect(),
            undefined: Vec::new(),
        }
    }

    #[test]
    fn ranking_means() {
        let t = table(
            &[
                (0, 0, 0.3),
                (0, 1, 0.3),
                (1, 0, 0.2),
                (1, 1, 0.4),
                (1, 5, 0.0),
            ],
            3,
        );
        let r = mean_homogeneity_ranking(&t, 5);
        assert_eq!(r.ranked.len(), 2);
        assert_eq!(r.ranked[0].0, 0);
        assert!((r.ranked[0].1 - 0.3).abs() < 1e-15);
        assert!((r.ranked[1].1 - 0.3).abs() < 1e-15);
        assert_eq!(r.excluded, vec![2]);
    }

    #[test]
    fn bias_examples() {
        assert_eq!(bias_score(0.5, 0.5), Some(0.5));
        assert_eq!(bias_score(0.2, 0.0), Some(1.0));
        assert!((bias_score(0.03, 0.01).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(bias_score(0.0, 0.0), None);
    }

    fn profiles(freqs: &[&[f64]]) -> ProfileSet {
        ProfileSet {
            profiles: freqs
                .iter()
                .enumerate()
                .map(|(a, f)| AttractorProfile {
                    attractor: a as u32,
                    frequency: f.to_vec(),
                })
                .collect(),
            empty: Vec::new(),
        }
    }

    fn biases(values: &[(u32, f64)]) -> Vec<BeliefBias> {
        values
            .iter()
            .map(|&(belief, bias)| BeliefBias {
                belief,
                p_a: 0.0,
                p_b: 0.0,
                bias,
            })
            .collect()
    }

    #[test]
    fn attractor_bias_examples() {
        let t = attractor_bias(
            &profiles(&[&[0.0, 1.0], &[0.5, 0.5]]),
            &biases(&[(0, 1.0), (1, 0.9)]),
        );
        assert!((t.bias[&0] - 0.9).abs() < 1e-15);
        assert!((t.bias[&1] - 0.95).abs() < 1e-15);
        let t = attractor_bias(&profiles(&[&[0.5, 0.5]]), &biases(&[(0, 1.0), (1, 0.0)]));
        assert_eq!(t.bias[&0], 0.5);
    }

    #[test]
    fn undefined_mass_is_dropped_and_flagged() {
        let t = attractor_bias(&profiles(&[&[0.25, 0.75]]), &biases(&[(1, 0.4)]));
        assert!((t.bias[&0] - 0.4).abs() < 1e-15);
        assert_eq!(t.dropped_mass[&0], 0.25);
    }
}
