//! Population-normalized spike detection over attractor activity.
//!
//! For attractor `a`, week `w` and population `pop`:
//!
//! * `p = x / sum_i x_i` is the attractor's share of the population's
//!   activity that week,
//! * `p_hat = alpha * sum_{i=1..w} (1-alpha)^(i-1) * p[w-i]` is the
//!   truncated EWMA of past shares (weights are not renormalized),
//! * `sigma^2 = alpha * sum_{i=1..w} (1-alpha)^(i-1) * (p[w-i] - p_hat)^2`,
//! * `x_hat = p_hat * sum_i x_i`,
//! * `z = (p - p_hat) / sigma`, in share units.
//!
//! Weeks are 0-based, so week 0 has an empty history.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::beliefdyn::SmoothingParams;
use crate::datamodel::{Community, WeeklyCounts};
use crate::landscape::AssignmentTable;

pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-9;
pub const DEFAULT_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpikeError {
    #[error("empty week window {start}..{end}")]
    EmptyWindow { start: u32, end: u32 },
}

/// Event counts per (population, attractor, week).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttractorActivity {
    pub k: u32,
    pub n_weeks: u32,
    counts: Vec<u64>,
}

impl AttractorActivity {
    pub fn zeros(k: u32, n_weeks: u32) -> Self {
        Self {
            k,
            n_weeks,
            counts: vec![0; 2 * k as usize * n_weeks as usize],
        }
    }

    /// Events of each user-week credited to its assigned attractor. Noise
    /// is excluded from the population totals.
    pub fn from_assignments(assignments: &AssignmentTable, counts: &WeeklyCounts) -> Self {
        let mut out = Self::zeros(assignments.k, counts.n_weeks());
        for ((u, w), total) in counts.user_week_totals() {
            if let Some(Some(a)) = assignments.get(u, w) {
                let pop = counts.users().community(u);
                *out.get_mut(pop, a, w) += total;
            }
        }
        out
    }

    fn index(&self, pop: Community, attractor: u32, week: u32) -> usize {
        (pop.index() * self.k as usize + attractor as usize) * self.n_weeks as usize + week as usize
    }

    pub fn get(&self, pop: Community, attractor: u32, week: u32) -> u64 {
        self.counts[self.index(pop, attractor, week)]
    }

    pub fn get_mut(&mut self, pop: Community, attractor: u32, week: u32) -> &mut u64 {
        let i = self.index(pop, attractor, week);
        &mut self.counts[i]
    }

    pub fn week_total(&self, pop: Community, week: u32) -> u64 {
        (0..self.k).map(|a| self.get(pop, a, week)).sum()
    }

    /// Attractor shares for one population-week; `None` with no activity.
    pub fn shares(&self, pop: Community, week: u32) -> Option<Vec<f64>> {
        let total = self.week_total(pop, week);
        (total > 0).then(|| {
            (0..self.k)
                .map(|a| self.get(pop, a, week) as f64 / total as f64)
                .collect()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpikeConfig {
    pub params: SmoothingParams,
    pub threshold: f64,
    /// Weeks `< burn_in` are never spikes.
    pub burn_in: u32,
    pub sigma_floor: f64,
}

impl SpikeConfig {
    /// Threshold 2, burn-in of `ceil(half_life)` weeks.
    pub fn new(params: SmoothingParams) -> Self {
        Self {
            params,
            threshold: DEFAULT_THRESHOLD,
            burn_in: libm::ceil(params.half_life_weeks) as u32,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpikeStats {
    pub attractor: u32,
    pub week: u32,
    pub population: Community,
    pub p: f64,
    pub p_hat: f64,
    pub x: u64,
    pub x_hat: f64,
    pub sigma: f64,
    /// `None` when the cell is degenerate.
    pub z: Option<f64>,
    pub is_spike: bool,
    /// `sigma` below the floor while `|p - p_hat|` is above it.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpikeReport {
    /// Canonical (attractor, week, population) order.
    pub stats: Vec<SpikeStats>,
    /// Population-weeks without activity; no stats are emitted for them.
    pub undefined: Vec<(u32, Community)>,
}

impl SpikeReport {
    pub fn spikes(&self) -> impl Iterator<Item = &SpikeStats> {
        self.stats.iter().filter(|s| s.is_spike)
    }

    pub fn degenerate(&self) -> impl Iterator<Item = &SpikeStats> {
        self.stats.iter().filter(|s| s.degenerate)
    }

    pub fn get(&self, attractor: u32, week: u32, population: Community) -> Option<&SpikeStats> {
        self.stats
            .iter()
            .find(|s| (s.attractor, s.week, s.population) == (attractor, week, population))
    }
}

/// Runs the detector over every (attractor, week, population) cell.
///
/// Weeks with no population activity contribute no term to later
/// histories; the lag of the remaining terms is unchanged.
pub fn detect_spikes(activity: &AttractorActivity, cfg: &SpikeConfig) -> SpikeReport {
    let alpha = cfg.params.alpha;
    let decay = 1.0 - alpha;
    let shares: [Vec<Option<Vec<f64>>>; 2] = Community::ALL.map(|pop| {
        (0..activity.n_weeks)
            .map(|w| activity.shares(pop, w))
            .collect()
    });

    let mut undefined = Vec::new();
    for w in 0..activity.n_weeks {
        for pop in Community::ALL {
            if shares[pop.index()][w as usize].is_none() {
                undefined.push((w, pop));
            }
        }
    }

    let mut stats = Vec::new();
    for a in 0..activity.k {
        for w in 0..activity.n_weeks {
            for pop in Community::ALL {
                let series = &shares[pop.index()];
                let Some(current) = &series[w as usize] else {
                    continue;
                };
                let p = current[a as usize];
                let history = (1..=w).filter_map(|i| {
                    let weight = alpha * libm::pow(decay, f64::from(i - 1));
                    series[(w - i) as usize]
                        .as_ref()
                        .map(|s| (weight, s[a as usize]))
                });
                let p_hat: f64 = history.clone().map(|(wt, past)| wt * past).sum();
                let variance: f64 = history
                    .map(|(wt, past)| wt * (past - p_hat) * (past - p_hat))
                    .sum();
                let sigma = libm::sqrt(variance);
                let gap = p - p_hat;
                let (z, degenerate) = if sigma >= cfg.sigma_floor {
                    (Some(gap / sigma), false)
                } else if gap.abs() > cfg.sigma_floor {
                    (None, true)
                } else {
                    (Some(0.0), false)
                };
                let is_spike =
                    !degenerate && w >= cfg.burn_in && z.is_some_and(|z| z > cfg.threshold);
                let total = activity.week_total(pop, w);
                stats.push(SpikeStats {
                    attractor: a,
                    week: w,
                    population: pop,
                    p,
                    p_hat,
                    x: activity.get(pop, a, w),
                    x_hat: p_hat * total as f64,
                    sigma,
                    z,
                    is_spike,
                    degenerate,
                });
            }
        }
    }
    SpikeReport { stats, undefined }
}

/// Attractors with at least one spike from each population inside `window`.
pub fn coordinated_spikes(
    report: &SpikeReport,
    window: Range<u32>,
) -> Result<Vec<u32>, SpikeError> {
    if window.is_empty() {
        return Err(SpikeError::EmptyWindow {
            start: window.start,
            end: window.end,
        });
    }
    let mut seen: alloc::collections::BTreeMap<u32, [bool; 2]> = Default::default();
    for s in report.spikes().filter(|s| window.contains(&s.week)) {
        seen.entry(s.attractor).or_default()[s.population.index()] = true;
    }
    Ok(seen
        .into_iter()
        .filter(|(_, both)| both[0] && both[1])
        .map(|(a, _)| a)
        .collect())
}

/// Attractors with any spike inside `window`, optionally for one population.
pub fn spiking_attractors(
    report: &SpikeReport,
    window: Range<u32>,
    pop: Option<Community>,
) -> Vec<u32> {
    let mut out: Vec<u32> = report
        .spikes()
        .filter(|s| window.contains(&s.week) && pop.is_none_or(|p| p == s.population))
        .map(|s| s.attractor)
        .collect();
    out.dedup();
    out
}
