//! Seeded scenario generator with planted ground truth.
//!
//! Randomness comes from ChaCha8 seeded with `seed`: stream 0 draws events,
//! stream 1 draws embedding coordinates. The draw order is fixed:
//! users in generation order (attractor blueprints in order, community A
//! members then B members, then amplifiers), weeks ascending; per
//! user-week one Poisson count, then per event one belief and one
//! within-week offset.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::datamodel::{BeliefEvent, Community, SECONDS_PER_WEEK};
use crate::landscape::{EmbeddedPoint, EmbeddingRow};
use crate::UserIdx;

/// Poisson draws with a larger mean are split into chunks of this size.
const POISSON_CHUNK: f64 = 500.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid(msg: String) -> SynthError {
    SynthError::Invalid(msg)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttractorBlueprint {
    pub center: [f64; 2],
    /// Standard deviation of embedding coordinates around the center.
    pub spread: f64,
    /// `(belief, weight)`; weights sum to 1.
    pub mixture: Vec<(u32, f64)>,
    /// Home users per community.
    pub members: [u32; 2],
    /// Mean events per user-week per community.
    pub rate: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlantedSpike {
    pub attractor: u32,
    pub week: u32,
    pub population: Community,
    pub multiplier: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MigrationStep {
    pub from_week: u32,
    /// `(attractor, weight)`; the cohort is apportioned by largest remainder.
    pub allocation: Vec<(u32, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AmplifierSpec {
    pub community: Community,
    pub size: u32,
    /// Mean events per amplifier-week.
    pub rate: f64,
    /// Must start at week 0.
    pub schedule: Vec<MigrationStep>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScenarioConfig {
    pub seed: u64,
    pub weeks: u32,
    pub n_beliefs: u32,
    pub epoch: i64,
    pub attractors: Vec<AttractorBlueprint>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub spikes: Vec<PlantedSpike>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub amplifiers: Option<AmplifierSpec>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.weeks == 0 || self.n_beliefs == 0 || self.attractors.is_empty() {
            return Err(invalid(format!(
                "weeks, n_beliefs and attractors must be non-empty ({} weeks, B = {}, {} attractors)",
                self.weeks,
                self.n_beliefs,
                self.attractors.len()
            )));
        }
        let k = self.attractors.len() as u32;
        for (a, bp) in self.attractors.iter().enumerate() {
            if bp.mixture.is_empty() {
                return Err(invalid(format!("attractor {a} has an empty mixture")));
            }
            let total: f64 = bp.mixture.iter().map(|&(_, w)| w).sum();
            if (total - 1.0).abs() > 1e-9 || bp.mixture.iter().any(|&(_, w)| !(0.0..).contains(&w))
            {
                return Err(invalid(format!(
                    "attractor {a} mixture is not normalized (sum {total})"
                )));
            }
            if let Some(&(b, _)) = bp.mixture.iter().find(|&&(b, _)| b >= self.n_beliefs) {
                return Err(invalid(format!("attractor {a} uses belief {b} >= B")));
            }
            if !(0.0..).contains(&bp.spread) || !bp.center.iter().all(|c| c.is_finite()) {
                return Err(invalid(format!(
                    "attractor {a} has an invalid center or spread"
                )));
            }
            if bp.rate.iter().any(|&r| !(r >= 0.0 && r.is_finite())) {
                return Err(invalid(format!("attractor {a} has an invalid rate")));
            }
        }
        for s in &self.spikes {
            if s.attractor >= k
                || s.week >= self.weeks
                || !(s.multiplier > 0.0 && s.multiplier.is_finite())
            {
                return Err(invalid(format!("invalid planted spike {s:?}")));
            }
        }
        if let Some(amp) = &self.amplifiers {
            if amp.schedule.first().is_none_or(|s| s.from_week != 0) {
                return Err(invalid("amplifier schedule must start at week 0".into()));
            }
            if !(amp.rate >= 0.0 && amp.rate.is_finite()) {
                return Err(invalid("invalid amplifier rate".into()));
            }
            for pair in amp.schedule.windows(2) {
                if pair[1].from_week <= pair[0].from_week {
                    return Err(invalid(
                        "amplifier schedule must be strictly increasing".into(),
                    ));
                }
            }
            for step in &amp.schedule {
                if step.from_week >= self.weeks {
                    return Err(invalid(format!(
                        "migration at week {} is outside the study",
                        step.from_week
                    )));
                }
                let total: f64 = step.allocation.iter().map(|&(_, w)| w).sum();
                if step
                    .allocation
                    .iter()
                    .any(|&(a, w)| a >= k || !(0.0..).contains(&w))
                    || total.is_nan()
                    || total <= 0.0
                {
                    return Err(invalid(format!(
                        "invalid allocation at week {}",
                        step.from_week
                    )));
                }
            }
        }
        Ok(())
    }

    fn multiplier(&self, attractor: u32, week: u32, pop: Community) -> f64 {
        self.spikes
            .iter()
            .filter(|s| (s.attractor, s.week, s.population) == (attractor, week, pop))
            .map(|s| s.multiplier)
            .product()
    }
}

/// Largest-remainder apportionment of `n` items over `weights`.
fn apportion(n: u32, weights: &[(u32, f64)]) -> Vec<(u32, u32)> {
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    let quotas: Vec<f64> = weights
        .iter()
        .map(|&(_, w)| w / total * f64::from(n))
        .collect();
    let mut seats: Vec<u32> = quotas.iter().map(|q| libm::floor(*q) as u32).collect();
    let mut left = n - seats.iter().sum::<u32>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - libm::floor(quotas[a]);
        let rb = quotas[b] - libm::floor(quotas[b]);
        rb.partial_cmp(&ra)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    for i in order {
        if left == 0 {
            break;
        }
        seats[i] += 1;
        left -= 1;
    }
    weights
        .iter()
        .zip(seats)
        .map(|(&(a, _), s)| (a, s))
        .collect()
}

struct SynthUser {
    id: String,
    community: Community,
    is_amplifier: bool,
    /// Home attractor per week.
    homes: Vec<u32>,
    /// Event rate per week (before spike multipliers).
    rates: Vec<f64>,
}

fn build_users(cfg: &ScenarioConfig) -> Vec<SynthUser> {
    let weeks = cfg.weeks as usize;
    let mut users = Vec::new();
    for (a, bp) in cfg.attractors.iter().enumerate() {
        for c in Community::ALL {
            for i in 0..bp.members[c.index()] {
                users.push(SynthUser {
                    id: format!("{}-{a:03}-{i:04}", c.code().to_ascii_lowercase()),
                    community: c,
                    is_amplifier: false,
                    homes: vec![a as u32; weeks],
                    rates: vec![bp.rate[c.index()]; weeks],
                });
            }
        }
    }
    if let Some(amp) = &cfg.amplifiers {
        let mut homes = vec![vec![0u32; weeks]; amp.size as usize];
        for (s, step) in amp.schedule.iter().enumerate() {
            let end = amp.schedule.get(s + 1).map_or(cfg.weeks, |n| n.from_week);
            let mut slot = 0usize;
            for (attractor, count) in apportion(amp.size, &step.allocation) {
                for _ in 0..count {
                    for w in step.from_week..end {
                        homes[slot][w as usize] = attractor;
                    }
                    slot += 1;
                }
            }
        }
        for (i, h) in homes.into_iter().enumerate() {
            users.push(SynthUser {
                id: format!("amp-{i:04}"),
                community: amp.community,
                is_amplifier: true,
                homes: h,
                rates: vec![amp.rate; weeks],
            });
        }
    }
    users
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// Inverse-CDF Poisson draw; large means are split into independent chunks.
pub fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    let mut remaining = mean;
    let mut total = 0;
    while remaining > 0.0 {
        let lambda = remaining.min(POISSON_CHUNK);
        remaining -= lambda;
        let u = uniform(rng);
        let mut k = 0u64;
        let mut p = libm::exp(-lambda);
        let mut cdf = p;
        while u > cdf && p > 0.0 {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
        }
        total += k;
    }
    total
}

fn sample_mixture(rng: &mut ChaCha8Rng, mixture: &[(u32, f64)]) -> u32 {
    let u = uniform(rng);
    let mut acc = 0.0;
    for &(b, w) in mixture {
        acc += w;
        if u < acc {
            return b;
        }
    }
    mixture.last().expect("validated non-empty").0
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruthLabel {
    pub user: String,
    pub week: u32,
    pub attractor: u32,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruthProportion {
    pub attractor: u32,
    pub week: u32,
    pub population: Community,
    /// Expected share of the population's weekly activity.
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruthAllocation {
    pub week: u32,
    pub attractor: u32,
    pub users: u32,
    /// Expected amplifier events (rate times spike multiplier, summed).
    pub expected_events: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruthSpan {
    pub belief: u32,
    pub first_week: u32,
    pub last_week: u32,
}

/// Everything the generator planted or counted.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruth {
    pub seed: u64,
    pub n_events: u64,
    pub per_community_events: [u64; 2],
    /// Home attractor of every embedded user-week.
    pub labels: Vec<TruthLabel>,
    pub proportions: Vec<TruthProportion>,
    /// Cells whose rate was multiplied by something other than 1.
    pub spikes: Vec<PlantedSpike>,
    pub mixtures: Vec<Vec<(u32, f64)>>,
    pub amplifier_allocation: Vec<TruthAllocation>,
    /// Observed first/last mention week of every emitted belief.
    pub belief_spans: Vec<TruthSpan>,
    /// Expected weekly events per attractor and community, averaged over
    /// the study.
    pub expected_activity: Vec<[f64; 2]>,
    /// Pearson correlation of the two `expected_activity` columns.
    pub planted_correlation: Option<f64>,
}

impl GroundTruth {
    pub fn label_map(&self) -> BTreeMap<(&str, u32), u32> {
        self.labels
            .iter()
            .map(|l| ((l.user.as_str(), l.week), l.attractor))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Sorted by (timestamp, user, belief).
    pub events: Vec<BeliefEvent>,
    /// Sorted by (user, week).
    pub embedding: Vec<EmbeddingRow>,
    pub truth: GroundTruth,
}

/// Generates events, embedding rows and ground truth for a scenario.
pub fn generate_stream(cfg: &ScenarioConfig) -> Result<Scenario, SynthError> {
    cfg.validate()?;
    let users = build_users(cfg);
    let mut event_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut coord_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    coord_rng.set_stream(1);

    let mut events = Vec::new();
    let mut first_week: Vec<Option<u32>> = vec![None; users.len()];
    for (ui, u) in users.iter().enumerate() {
        for w in 0..cfg.weeks {
            let home = u.homes[w as usize];
            let mean = u.rates[w as usize] * cfg.multiplier(home, w, u.community);
            let n = poisson(&mut event_rng, mean);
            if n > 0 && first_week[ui].is_none() {
                first_week[ui] = Some(w);
            }
            let mixture = &cfg.attractors[home as usize].mixture;
            for _ in 0..n {
                let belief = sample_mixture(&mut event_rng, mixture);
                let offset = (event_rng.next_u64() % SECONDS_PER_WEEK as u64) as i64;
                events.push(BeliefEvent {
                    user: u.id.clone(),
                    timestamp: cfg.epoch + i64::from(w) * SECONDS_PER_WEEK + offset,
                    belief,
                    community: u.community,
                    is_amplifier: u.is_amplifier,
                });
            }
        }
    }
    events.sort_by(|a, b| (a.timestamp, &a.user, a.belief).cmp(&(b.timestamp, &b.user, b.belief)));

    let mut embedding = Vec::new();
    let mut labels = Vec::new();
    for (ui, u) in users.iter().enumerate() {
        let Some(start) = first_week[ui] else {
            continue;
        };
        for w in start..cfg.weeks {
            let home = u.homes[w as usize];
            let bp = &cfg.attractors[home as usize];
            let x = bp.center[0] + bp.spread * standard_normal(&mut coord_rng);
            let y = bp.center[1] + bp.spread * standard_normal(&mut coord_rng);
            embedding.push(EmbeddingRow {
                user: u.id.clone(),
                week: w,
                x,
                y,
            });
            labels.push(TruthLabel {
                user: u.id.clone(),
                week: w,
                attractor: home,
            });
        }
    }
    embedding.sort_by(|a, b| (&a.user, a.week).cmp(&(&b.user, b.week)));
    labels.sort_by(|a, b| (&a.user, a.week).cmp(&(&b.user, b.week)));

    let k = cfg.attractors.len();
    let mut proportions = Vec::new();
    let mut allocation = Vec::new();
    let mut expected_activity = vec![[0.0f64; 2]; k];
    for w in 0..cfg.weeks {
        let mut mass = [vec![0.0f64; k], vec![0.0f64; k]];
        let mut amp_users = vec![0u32; k];
        let mut amp_mass = vec![0.0f64; k];
        for u in &users {
            let home = u.homes[w as usize];
            let mean = u.rates[w as usize] * cfg.multiplier(home, w, u.community);
            mass[u.community.index()][home as usize] += mean;
            if u.is_amplifier {
                amp_users[home as usize] += 1;
                amp_mass[home as usize] += mean;
            }
        }
        for a in 0..k {
            for pop in Community::ALL {
                expected_activity[a][pop.index()] += mass[pop.index()][a] / f64::from(cfg.weeks);
                let total: f64 = mass[pop.index()].iter().sum();
                if total > 0.0 {
                    proportions.push(TruthProportion {
                        attractor: a as u32,
                        week: w,
                        population: pop,
                        p: mass[pop.index()][a] / total,
                    });
                }
            }
            if amp_users[a] > 0 {
                allocation.push(TruthAllocation {
                    week: w,
                    attractor: a as u32,
                    users: amp_users[a],
                    expected_events: amp_mass[a],
                });
            }
        }
    }

    let mut spans: BTreeMap<u32, (u32, u32)> = BTreeMap::new();
    let mut per_community = [0u64; 2];
    for e in &events {
        let w = ((e.timestamp - cfg.epoch) / SECONDS_PER_WEEK) as u32;
        spans
            .entry(e.belief)
            .and_modify(|s| {
                s.0 = s.0.min(w);
                s.1 = s.1.max(w);
            })
            .or_insert((w, w));
        per_community[e.community.index()] += 1;
    }

    let columns = Community::ALL.map(|c| {
        expected_activity
            .iter()
            .map(|v| v[c.index()])
            .collect::<Vec<_>>()
    });
    let planted_correlation = crate::comparative::pearson(&columns[0], &columns[1]).ok();
    let truth = GroundTruth {
        seed: cfg.seed,
        n_events: events.len() as u64,
        per_community_events: per_community,
        labels,
        proportions,
        spikes: cfg
            .spikes
            .iter()
            .copied()
            .filter(|s| s.multiplier != 1.0)
            .collect(),
        mixtures: cfg.attractors.iter().map(|a| a.mixture.clone()).collect(),
        amplifier_allocation: allocation,
        belief_spans: spans
            .into_iter()
            .map(|(belief, (first_week, last_week))| TruthSpan {
                belief,
                first_week,
                last_week,
            })
            .collect(),
        expected_activity,
        planted_correlation,
    };
    Ok(Scenario {
        events,
        embedding,
        truth,
    })
}

/// Isotropic Gaussian blobs of 2D points with their blob labels.
pub fn gaussian_blobs(
    seed: u64,
    centers: &[[f64; 2]],
    sigma: f64,
    per_blob: usize,
) -> (Vec<EmbeddedPoint>, Vec<u32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (b, c) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            let x = c[0] + sigma * standard_normal(&mut rng);
            let y = c[1] + sigma * standard_normal(&mut rng);
            points.push(EmbeddedPoint {
                user: UserIdx(points.len() as u32),
                week: 0,
                x,
                y,
            });
            labels.push(b as u32);
        }
    }
    (points, labels)
}

/// Ready-made scenarios used by the tests and `bld synth --preset`.
pub mod presets {
    use super::*;

    pub const EPOCH: i64 = 1_577_836_800;

    fn block_mixture(first: u32, len: u32) -> Vec<(u32, f64)> {
        let total = f64::from(len * (len + 1) / 2);
        (0..len)
            .map(|j| (first + j, f64::from(len - j) / total))
            .collect()
    }

    fn blueprint(
        center: [f64; 2],
        mixture: Vec<(u32, f64)>,
        members: [u32; 2],
        rate: f64,
    ) -> AttractorBlueprint {
        AttractorBlueprint {
            center,
            spread: 0.3,
            mixture,
            members,
            rate: [rate, rate],
        }
    }

    /// Three attractors; attractor 2 holds 10% of each population's activity
    /// (about 900 events per population-week, so the share has a sampling
    /// sd near 0.01) and gets a x3 spike for community A in week 20.
    pub fn spike(seed: u64) -> ScenarioConfig {
        let mut cfg = null(seed);
        cfg.spikes.push(PlantedSpike {
            attractor: 2,
            week: 20,
            population: Community::A,
            multiplier: 3.0,
        });
        cfg
    }

    /// [`spike`] without the planted spike.
    pub fn null(seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            seed,
            weeks: 26,
            n_beliefs: 30,
            epoch: EPOCH,
            attractors: vec![
                blueprint([0.0, 0.0], block_mixture(0, 10), [45, 45], 10.0),
                blueprint([10.0, 0.0], block_mixture(10, 10), [36, 36], 10.0),
                blueprint([0.0, 10.0], block_mixture(20, 10), [9, 9], 10.0),
            ],
            spikes: Vec::new(),
            amplifiers: None,
        }
    }

    /// Six attractors: four nearly single-community, one moderately mixed
    /// (4) and one evenly mixed (5). Attractor 5 gets a x3 spike from both
    /// communities in week 20. A 40-user amplifier cohort from community B
    /// migrates in weeks 20 and 22.
    pub fn rehearsal(seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            seed,
            weeks: 30,
            n_beliefs: 60,
            epoch: EPOCH,
            attractors: vec![
                blueprint([0.0, 0.0], block_mixture(0, 10), [40, 2], 8.0),
                blueprint([10.0, 0.0], block_mixture(10, 10), [40, 2], 8.0),
                blueprint([20.0, 0.0], block_mixture(20, 10), [2, 40], 8.0),
                blueprint([0.0, 10.0], block_mixture(30, 10), [2, 40], 8.0),
                blueprint([10.0, 10.0], block_mixture(40, 10), [30, 8], 8.0),
                blueprint([20.0, 10.0], block_mixture(50, 10), [12, 12], 8.0),
            ],
            spikes: vec![
                PlantedSpike {
                    attractor: 5,
                    week: 20,
                    population: Community::A,
                    multiplier: 3.0,
                },
                PlantedSpike {
                    attractor: 5,
                    week: 20,
                    population: Community::B,
                    multiplier: 3.0,
                },
            ],
            amplifiers: Some(AmplifierSpec {
                community: Community::B,
                size: 40,
                rate: 30.0,
                schedule: vec![
                    MigrationStep {
                        from_week: 0,
                        allocation: vec![(3, 0.6), (2, 0.4)],
                    },
                    MigrationStep {
                        from_week: 20,
                        allocation: vec![(5, 0.5), (3, 0.5)],
                    },
                    MigrationStep {
                        from_week: 22,
                        allocation: vec![(2, 0.75), (4, 0.25)],
                    },
                ],
            }),
        }
    }

    /// Three attractors with disjoint belief blocks, both communities in
    /// each, and a x3 spike from both communities in attractor 1, week 20.
    pub fn mixtures(seed: u64) -> ScenarioConfig {
        let mut spikes = Vec::new();
        for population in Community::ALL {
            spikes.push(PlantedSpike {
                attractor: 1,
                week: 20,
                population,
                multiplier: 3.0,
            });
        }
        ScenarioConfig {
            seed,
            weeks: 30,
            n_beliefs: 30,
            epoch: EPOCH,
            attractors: (0..3)
                .map(|a| {
                    blueprint(
                        [10.0 * a as f64, 0.0],
                        block_mixture(10 * a, 10),
                        [30, 30],
                        10.0,
                    )
                })
                .collect(),
            spikes,
            amplifiers: None,
        }
    }

    /// Community sizes per attractor for [`correlated`]: A grows linearly,
    /// B mixes A's pattern with an orthogonal one so the expected
    /// per-attractor activity correlates at about 0.8.
    pub fn correlated_members() -> Vec<[u32; 2]> {
        let n = 21usize;
        let z_a: Vec<f64> = (0..n).map(|a| a as f64 - 10.0).collect();
        let raw: Vec<f64> = (0..n).map(|a| ((a * 8) % n) as f64 - 10.0).collect();
        let proj = raw.iter().zip(&z_a).map(|(r, z)| r * z).sum::<f64>()
            / z_a.iter().map(|z| z * z).sum::<f64>();
        let perp: Vec<f64> = raw.iter().zip(&z_a).map(|(r, z)| r - proj * z).collect();
        let sd = |v: &[f64]| libm::sqrt(v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64);
        let (sa, sp) = (sd(&z_a), sd(&perp));
        (0..n)
            .map(|a| {
                let m_a = 4.0 + 0.9 * (z_a[a] + 10.0);
                let b = 14.0 + 6.0 * (0.8 * z_a[a] / sa + 0.6 * perp[a] / sp);
                [libm::round(m_a) as u32, libm::round(b).max(1.0) as u32]
            })
            .collect()
    }

    /// Twenty-one attractors on a 7x3 grid whose community-B activity
    /// pattern correlates with community A's at about 0.8.
    pub fn correlated(seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            seed,
            weeks: 26,
            n_beliefs: 63,
            epoch: EPOCH,
            attractors: correlated_members()
                .into_iter()
                .enumerate()
                .map(|(a, members)| {
                    let center = [10.0 * (a % 7) as f64, 10.0 * (a / 7) as f64];
                    blueprint(center, block_mixture(3 * a as u32, 3), members, 10.0)
                })
                .collect(),
            spikes: Vec::new(),
            amplifiers: None,
        }
    }

    pub fn by_name(name: &str, seed: u64) -> Option<ScenarioConfig> {
        Some(match name {
            "spike" => spike(seed),
            "null" => null(seed),
            "rehearsal" => rehearsal(seed),
            "mixtures" => mixtures(seed),
            "correlated" => correlated(seed),
            _ => return None,
        })
    }

    pub const NAMES: [&str; 5] = ["spike", "null", "rehearsal", "mixtures", "correlated"];
}
