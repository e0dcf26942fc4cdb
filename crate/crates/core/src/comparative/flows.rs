use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Range;

use super::{ComparativeError, PeriodSpec};
use crate::datamodel::{UserIdx, WeeklyCounts};
use crate::landscape::AssignmentTable;

/// Share of amplifier activity the reported core attractor set must cover.
pub const COVERAGE_TARGET: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodFlow {
    pub period: String,
    pub weeks: Range<u32>,
    /// Amplifier events landing in an attractor during the period.
    pub events: u64,
    /// Per-attractor share of those events; `None` without activity.
    pub shares: Option<Vec<f64>>,
    /// Smallest attractor set (largest shares first) covering
    /// [`COVERAGE_TARGET`] of the activity.
    pub coverage: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTable {
    pub k: u32,
    pub periods: Vec<PeriodFlow>,
}

/// Allocation of amplifier activity across attractors per period.
pub fn amplifier_flows(
    assignments: &AssignmentTable,
    counts: &WeeklyCounts,
    amplifiers: &BTreeSet<UserIdx>,
    periods: &PeriodSpec,
) -> Result<FlowTable, ComparativeError> {
    let k = assignments.k as usize;
    let totals = counts.user_week_totals();
    let mut out = Vec::new();
    for (name, weeks) in periods.resolve(counts.n_weeks())? {
        let mut per_attractor = vec![0u64; k];
        for (&(u, w), &n) in &totals {
            if !weeks.contains(&w) || !amplifiers.contains(&u) {
                continue;
            }
            if let Some(Some(a)) = assignments.get(u, w) {
                per_attractor[a as usize] += n;
            }
        }
        let events: u64 = per_attractor.iter().sum();
        let shares = (events > 0).then(|| {
            per_attractor
                .iter()
                .map(|&n| n as f64 / events as f64)
                .collect::<Vec<_>>()
        });
        let coverage = shares.as_deref().map(core_set).unwrap_or_default();
        out.push(PeriodFlow {
            period: name,
            weeks,
            events,
            shares,
            coverage,
        });
    }
    Ok(FlowTable {
        k: assignments.k,
        periods: out,
    })
}

fn core_set(shares: &[f64]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..shares.len()).filter(|&a| shares[a] > 0.0).collect();
    order.sort_by(|&a, &b| {
        shares[b]
            .partial_cmp(&shares[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut covered = 0.0;
    let mut out = Vec::new();
    for a in order {
        if covered >= COVERAGE_TARGET - 1e-12 {
            break;
        }
        covered += shares[a];
        out.push(a as u32);
    }
    out
}

/// Share-weighted attractor bias per period; `None` for periods without
/// amplifier activity.
pub fn weighted_bias_by_period(
    flows: &FlowTable,
    biases: &BTreeMap<u32, f64>,
) -> Result<Vec<(String, Option<f64>)>, ComparativeError> {
    flows
        .periods
        .iter()
        .map(|p| {
            let Some(shares) = &p.shares else {
                return Ok((p.period.clone(), None));
            };
            let mut total = 0.0;
            for (a, &s) in shares.iter().enumerate() {
                if s == 0.0 {
                    continue;
                }
                let bias = biases
                    .get(&(a as u32))
                    .ok_or(ComparativeError::MissingBias(a as u32))?;
                total += s * bias;
            }
            Ok((p.period.clone(), Some(total)))
        })
        .collect()
}
