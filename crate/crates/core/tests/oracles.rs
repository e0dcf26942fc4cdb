//! Library results checked against direct recounts and textbook formulas.

use std::collections::{BTreeMap, BTreeSet};

use bld_core::comparative::{
    amplifier_flows, pearson, period_activity_matrix, weighted_bias_by_period, ActivityMode,
    PeriodSpec,
};
use bld_core::events::AttractorActivity;
use bld_core::pipeline::{build_landscape, EmbeddingSource, LandscapeRun};
use bld_core::synth::{generate_stream, presets, Scenario};
use bld_core::*;
use proptest::prelude::*;

const WEEK: i64 = 604_800;

fn rehearsal() -> (Scenario, WeeklyCounts, LandscapeRun) {
    let cfg = presets::rehearsal(11);
    let s = generate_stream(&cfg).unwrap();
    let mut counts = bin_weekly(&s.events, cfg.epoch, cfg.n_beliefs).unwrap();
    counts.extend_weeks(cfg.weeks);
    let run = build_landscape(
        &counts,
        SmoothingParams::default(),
        EmbeddingSource::Rows(&s.embedding),
        &ClusterConfig::top_k(6),
    )
    .unwrap();
    (s, counts, run)
}

fn label_of(run: &LandscapeRun, counts: &WeeklyCounts, e: &BeliefEvent) -> (u32, Option<u32>) {
    let week = ((e.timestamp - presets::EPOCH) / WEEK) as u32;
    let u = counts.users().index_of(&e.user).unwrap();
    (week, run.assignments.get(u, week).flatten())
}

#[test]
fn activity_matches_event_recount() {
    let (s, counts, run) = rehearsal();
    let act = AttractorActivity::from_assignments(&run.assignments, &counts);
    let mut direct: BTreeMap<(Community, u32, u32), u64> = BTreeMap::new();
    for e in &s.events {
        if let (w, Some(a)) = label_of(&run, &counts, e) {
            *direct.entry((e.community, a, w)).or_default() += 1;
        }
    }
    for c in Community::ALL {
        for a in 0..act.k {
            for w in 0..act.n_weeks {
                assert_eq!(
                    act.get(c, a, w),
                    direct.get(&(c, a, w)).copied().unwrap_or(0)
                );
            }
        }
    }

    let m = period_activity_matrix(&act, 3..9, ActivityMode::PerAttractorMean).unwrap();
    for row in &m.rows {
        for c in Community::ALL {
            let sum: u64 = (3..9)
                .map(|w| direct.get(&(c, row.attractor, w)).copied().unwrap_or(0))
                .sum();
            assert!((row.values[c.index()] - sum as f64 / 6.0).abs() < 1e-12);
        }
    }
    let cells = period_activity_matrix(&act, 3..9, ActivityMode::PerWeekCells).unwrap();
    assert_eq!(cells.rows.len(), act.k as usize * 6);
}

#[test]
fn flows_and_weighted_bias_match_recount() {
    let (s, counts, run) = rehearsal();
    let amps = counts.users().amplifiers();
    let spec = PeriodSpec::parse("early=0..9,late=20..29").unwrap();
    let flows = amplifier_flows(&run.assignments, &counts, &amps, &spec).unwrap();
    let biases: BTreeMap<u32, f64> = (0..run.assignments.k)
        .map(|a| (a, 0.1 * a as f64 - 0.2))
        .collect();
    let weighted = weighted_bias_by_period(&flows, &biases).unwrap();
    for (p, (range, (_, wb))) in flows
        .periods
        .iter()
        .zip([(0u32..10), (20..30)].into_iter().zip(&weighted))
    {
        let mut per: BTreeMap<u32, u64> = BTreeMap::new();
        for e in s.events.iter().filter(|e| e.is_amplifier) {
            if let (w, Some(a)) = label_of(&run, &counts, e) {
                if range.contains(&w) {
                    *per.entry(a).or_default() += 1;
                }
            }
        }
        let total: u64 = per.values().sum();
        assert_eq!(p.events, total);
        let shares = p.shares.as_ref().unwrap();
        let mut dot = 0.0;
        for (a, &share) in shares.iter().enumerate() {
            let n = per.get(&(a as u32)).copied().unwrap_or(0);
            assert!((share - n as f64 / total as f64).abs() < 1e-12);
            dot += n as f64 / total as f64 * biases[&(a as u32)];
        }
        assert!((wb.unwrap() - dot).abs() < 1e-12);
    }
    let none: BTreeSet<UserIdx> = BTreeSet::new();
    let empty = amplifier_flows(&run.assignments, &counts, &none, &spec).unwrap();
    assert!(weighted_bias_by_period(&empty, &biases)
        .unwrap()
        .iter()
        .all(|(_, v)| v.is_none()));
}

fn covariance_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

proptest! {
    #[test]
    fn pearson_matches_raw_moment_formula(pairs in prop::collection::vec((0u32..500, 0u32..500), 3..60)) {
        let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        match pearson(&x, &y) {
            Ok(r) => prop_assert!((r - covariance_r(&x, &y)).abs() < 1e-9),
            Err(_) => prop_assert!(x.windows(2).all(|w| w[0] == w[1]) || y.windows(2).all(|w| w[0] == w[1])),
        }
    }
}
