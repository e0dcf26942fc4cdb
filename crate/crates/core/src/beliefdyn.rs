//! Exponentially decayed belief vectors and belief lifespans.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::datamodel::{week_of, BeliefEvent, DataError, UserIdx, UserTable, WeeklyCounts};

/// Vectors over more belief clusters than this are stored sparsely.
pub const DENSE_LIMIT: u32 = 4096;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("half-life must be a positive finite number of weeks, got {0}")]
    InvalidHalfLife(f64),
    #[error("belief lifespans need at least one event")]
    EmptyStream,
    #[error(transparent)]
    Data(#[from] DataError),
}

/// EWMA smoothing factor for a half-life in weeks: `1 - exp(ln(0.5) / h)`.
pub fn alpha_from_half_life(half_life_weeks: f64) -> Result<f64, DynamicsError> {
    if !(half_life_weeks > 0.0 && half_life_weeks.is_finite()) {
        return Err(DynamicsError::InvalidHalfLife(half_life_weeks));
    }
    Ok(-libm::expm1(-core::f64::consts::LN_2 / half_life_weeks))
}

/// Half-life and the matching smoothing factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingParams {
    pub half_life_weeks: f64,
    pub alpha: f64,
}

impl SmoothingParams {
    pub fn from_half_life(half_life_weeks: f64) -> Result<Self, DynamicsError> {
        Ok(Self {
            half_life_weeks,
            alpha: alpha_from_half_life(half_life_weeks)?,
        })
    }

    /// Per-week retention `1 - alpha`.
    pub fn decay(&self) -> f64 {
        1.0 - self.alpha
    }
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self::from_half_life(5.0).expect("5 weeks is a valid half-life")
    }
}

/// A non-negative weight vector over belief clusters.
#[derive(Clone, Debug, PartialEq)]
pub enum BeliefVector {
    Dense(Vec<f64>),
    Sparse {
        len: u32,
        entries: BTreeMap<u32, f64>,
    },
}

impl BeliefVector {
    pub fn zeros(len: u32) -> Self {
        if len > DENSE_LIMIT {
            BeliefVector::Sparse {
                len,
                entries: BTreeMap::new(),
            }
        } else {
            BeliefVector::Dense(vec![0.0; len as usize])
        }
    }

    pub fn len(&self) -> u32 {
        match self {
            BeliefVector::Dense(v) => v.len() as u32,
            BeliefVector::Sparse { len, .. } => *len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, belief: u32) -> f64 {
        match self {
            BeliefVector::Dense(v) => v.get(belief as usize).copied().unwrap_or(0.0),
            BeliefVector::Sparse { entries, .. } => entries.get(&belief).copied().unwrap_or(0.0),
        }
    }

    /// Non-zero `(belief, weight)` entries in belief order.
    pub fn nonzero(&self) -> Vec<(u32, f64)> {
        match self {
            BeliefVector::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != 0.0)
                .map(|(b, &x)| (b as u32, x))
                .collect(),
            BeliefVector::Sparse { entries, .. } => entries
                .iter()
                .filter(|(_, &x)| x != 0.0)
                .map(|(&b, &x)| (b, x))
                .collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            BeliefVector::Dense(v) => v.clone(),
            BeliefVector::Sparse { len, entries } => {
                let mut out = vec![0.0; *len as usize];
                for (&b, &x) in entries {
                    out[b as usize] = x;
                }
                out
            }
        }
    }

    pub fn l1(&self) -> f64 {
        match self {
            BeliefVector::Dense(v) => v.iter().sum(),
            BeliefVector::Sparse { entries, .. } => entries.values().sum(),
        }
    }

    fn scale(&mut self, factor: f64) {
        match self {
            BeliefVector::Dense(v) => v.iter_mut().for_each(|x| *x *= factor),
            BeliefVector::Sparse { entries, .. } => entries.values_mut().for_each(|x| *x *= factor),
        }
    }

    fn add(&mut self, belief: u32, amount: f64) {
        match self {
            BeliefVector::Dense(v) => v[belief as usize] += amount,
            BeliefVector::Sparse { entries, .. } => *entries.entry(belief).or_insert(0.0) += amount,
        }
    }

    fn normalized(&self) -> Self {
        let mut out = self.clone();
        let total = self.l1();
        if total > 0.0 {
            out.scale(1.0 / total);
        }
        out
    }
}

/// One user-week of a [`BeliefVectorSeries`].
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesEntry {
    pub user: UserIdx,
    pub week: u32,
    /// At least one event this week.
    pub active: bool,
    /// L1-normalized decayed belief distribution.
    pub vector: BeliefVector,
}

/// Per user-week belief vectors, from each user's first active week to the
/// end of the study window.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefVectorSeries {
    pub n_beliefs: u32,
    pub n_weeks: u32,
    pub params: SmoothingParams,
    users: UserTable,
    entries: Vec<SeriesEntry>,
}

impl BeliefVectorSeries {
    pub fn users(&self) -> &UserTable {
        &self.users
    }

    /// Entries in (user, week) order.
    pub fn entries(&self) -> &[SeriesEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, user: UserIdx, week: u32) -> Option<&SeriesEntry> {
        self.entries
            .binary_search_by(|e| (e.user, e.week).cmp(&(user, week)))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Rebuilds a series from stored entries (e.g. a cache file).
    pub fn from_entries(
        n_beliefs: u32,
        n_weeks: u32,
        params: SmoothingParams,
        users: UserTable,
        mut entries: Vec<SeriesEntry>,
    ) -> Self {
        entries.sort_by_key(|e| (e.user, e.week));
        Self {
            n_beliefs,
            n_weeks,
            params,
            users,
            entries,
        }
    }
}

/// Builds decayed belief vectors for every user.
///
/// Per user and cluster the raw state follows
/// `s[w] = alpha * c[w] + (1 - alpha) * s[w - 1]`, starting from zero before
/// the user's first event. The stored vector is `s[w] / |s[w]|_1`. Inactive
/// weeks copy the previous normalized vector, since a uniform decay leaves
/// the normalized vector unchanged.
pub fn build_belief_vectors(counts: &WeeklyCounts, params: SmoothingParams) -> BeliefVectorSeries {
    let decay = params.decay();
    let mut entries = Vec::new();
    for (user, _) in counts.users().iter() {
        let mut by_week: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
        for (w, b, n) in counts.user_cells(user) {
            by_week.entry(w).or_default().push((b, n));
        }
        let Some(&first) = by_week.keys().next() else {
            continue;
        };
        let mut state = BeliefVector::zeros(counts.n_beliefs);
        let mut current: Option<BeliefVector> = None;
        for week in first..counts.n_weeks() {
            state.scale(decay);
            let active = match by_week.get(&week) {
                Some(cells) => {
                    for &(b, n) in cells {
                        state.add(b, params.alpha * f64::from(n));
                    }
                    current = Some(state.normalized());
                    true
                }
                None => false,
            };
            entries.push(SeriesEntry {
                user,
                week,
                active,
                vector: current.clone().expect("first week is active"),
            });
        }
    }
    BeliefVectorSeries {
        n_beliefs: counts.n_beliefs,
        n_weeks: counts.n_weeks(),
        params,
        users: counts.users().clone(),
        entries,
    }
}

/// First and last week a belief was mentioned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BeliefSpan {
    pub first_week: u32,
    pub last_week: u32,
}

impl BeliefSpan {
    pub fn lifespan(&self) -> u32 {
        self.last_week - self.first_week
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LifespanHistogram {
    /// Only beliefs that were mentioned at least once.
    pub spans: BTreeMap<u32, BeliefSpan>,
    /// `histogram[d]` = number of beliefs with a lifespan of `d` weeks.
    pub histogram: Vec<u64>,
}

impl LifespanHistogram {
    pub fn mean_lifespan(&self) -> f64 {
        let total: u64 = self.spans.values().map(|s| u64::from(s.lifespan())).sum();
        total as f64 / self.spans.len() as f64
    }
}

/// Weeks between the first and last mention of every belief.
pub fn belief_lifespans(
    events: &[BeliefEvent],
    epoch: i64,
) -> Result<LifespanHistogram, DynamicsError> {
    if events.is_empty() {
        return Err(DynamicsError::EmptyStream);
    }
    let mut spans: BTreeMap<u32, BeliefSpan> = BTreeMap::new();
    for e in events {
        let week = week_of(e.timestamp, epoch).ok_or_else(|| DataError::PreEpoch {
            user: e.user.clone(),
            timestamp: e.timestamp,
        })?;
        spans
            .entry(e.belief)
            .and_modify(|s| {
                s.first_week = s.first_week.min(week);
                s.last_week = s.last_week.max(week);
            })
            .or_insert(BeliefSpan {
                first_week: week,
                last_week: week,
            });
    }
    let longest = spans.values().map(BeliefSpan::lifespan).max().unwrap_or(0);
    let mut histogram = vec![0u64; longest as usize + 1];
    for s in spans.values() {
        histogram[s.lifespan() as usize] += 1;
    }
    Ok(LifespanHistogram { spans, histogram })
}
