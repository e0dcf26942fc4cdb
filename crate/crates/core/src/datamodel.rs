//! Event-stream data model, record validation and weekly binning.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

/// Length of one analysis week in seconds.
pub const SECONDS_PER_WEEK: i64 = 604_800;

/// Fraction of rejected rows above which a stream is treated as the wrong
/// schema rather than as dirty data.
pub const MAX_REJECTED_FRACTION: f64 = 0.5;

/// One of the two populations under study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Community {
    A,
    B,
}

impl Community {
    pub const ALL: [Community; 2] = [Community::A, Community::B];

    pub fn index(self) -> usize {
        match self {
            Community::A => 0,
            Community::B => 1,
        }
    }

    /// Record code used in event files.
    pub fn code(self) -> &'static str {
        match self {
            Community::A => "A",
            Community::B => "B",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "A" => Some(Community::A),
            "B" => Some(Community::B),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Community::A => Community::B,
            Community::B => Community::A,
        }
    }
}

impl fmt::Display for Community {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One belief-expressing post.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BeliefEvent {
    pub user: String,
    /// UTC seconds since the Unix epoch.
    pub timestamp: i64,
    pub belief: u32,
    pub community: Community,
    pub is_amplifier: bool,
}

/// Stream header: belief-cluster count, week-0 start, community names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamHeader {
    pub n_beliefs: u32,
    pub epoch: i64,
    /// Display names for communities `A` and `B`.
    pub community_names: [String; 2],
    /// Optional study-window length in weeks. Events at or after
    /// `epoch + weeks * SECONDS_PER_WEEK` are outside the window.
    pub weeks: Option<u32>,
}

impl StreamHeader {
    pub fn window_end(&self) -> Option<i64> {
        self.weeks
            .map(|w| self.epoch + i64::from(w) * SECONDS_PER_WEEK)
    }
}

/// Week index of a timestamp, or `None` before the epoch.
pub fn week_of(timestamp: i64, epoch: i64) -> Option<u32> {
    if timestamp < epoch {
        return None;
    }
    u32::try_from((timestamp - epoch).div_euclid(SECONDS_PER_WEEK)).ok()
}

/// A loosely-typed input row, as read from a record before validation.
///
/// Fields that were missing or of the wrong JSON type are `None`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RawRecord {
    pub user: Option<String>,
    pub ts: Option<i64>,
    pub belief: Option<i64>,
    pub community: Option<String>,
    pub amp: Option<bool>,
}

/// Why a row was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RejectReason {
    MalformedRecord,
    MissingUser,
    BadTimestamp,
    BadClusterId,
    ClusterOutOfRange,
    UnknownCommunity,
    OutsideWindow,
    CommunityConflict,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::MalformedRecord => "malformed_record",
            RejectReason::MissingUser => "missing_user",
            RejectReason::BadTimestamp => "bad_timestamp",
            RejectReason::BadClusterId => "bad_cluster_id",
            RejectReason::ClusterOutOfRange => "cluster_out_of_range",
            RejectReason::UnknownCommunity => "unknown_community",
            RejectReason::OutsideWindow => "outside_window",
            RejectReason::CommunityConflict => "community_conflict",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DataError {
    #[error("schema mismatch: {rejected} of {total} rows rejected")]
    SchemaMismatch { rejected: u64, total: u64 },
    #[error("pre-epoch event: user {user} at {timestamp}")]
    PreEpoch { user: String, timestamp: i64 },
    #[error("belief cluster {belief} out of range for B = {n_beliefs}")]
    ClusterOutOfRange { belief: u32, n_beliefs: u32 },
    #[error("user {user} appears in both communities")]
    CommunityConflict { user: String },
}

/// Summary of a validated stream.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ValidationReport {
    pub n_events: u64,
    pub n_users: u64,
    pub n_rejected: u64,
    /// `(reason code, count)` in reason order; only reasons that occurred.
    pub rejection_reasons: Vec<(String, u64)>,
    /// Accepted events per community, indexed by [`Community::index`].
    pub per_community_totals: [u64; 2],
}

/// Row-by-row validator that tallies accepted and rejected records.
#[derive(Debug)]
pub struct EventValidator<'h> {
    header: &'h StreamHeader,
    user_community: BTreeMap<String, Community>,
    rejected: BTreeMap<RejectReason, u64>,
    n_events: u64,
    per_community: [u64; 2],
}

impl<'h> EventValidator<'h> {
    pub fn new(header: &'h StreamHeader) -> Self {
        Self {
            header,
            user_community: BTreeMap::new(),
            rejected: BTreeMap::new(),
            n_events: 0,
            per_community: [0; 2],
        }
    }

    /// Records a row that could not be parsed at all.
    pub fn reject(&mut self, reason: RejectReason) {
        *self.rejected.entry(reason).or_insert(0) += 1;
    }

    /// Validates one row. Rejected rows are tallied and yield `None`.
    pub fn check(&mut self, raw: RawRecord) -> Option<BeliefEvent> {
        match self.classify(raw) {
            Ok(event) => {
                self.n_events += 1;
                self.per_community[event.community.index()] += 1;
                Some(event)
            }
            Err(reason) => {
                self.reject(reason);
                None
            }
        }
    }

    fn classify(&mut self, raw: RawRecord) -> Result<BeliefEvent, RejectReason> {
        let user = match raw.user {
            Some(u) if !u.is_empty() => u,
            _ => return Err(RejectReason::MissingUser),
        };
        let timestamp = raw.ts.ok_or(RejectReason::BadTimestamp)?;
        let belief = raw.belief.ok_or(RejectReason::BadClusterId)?;
        let belief = u32::try_from(belief).map_err(|_| RejectReason::ClusterOutOfRange)?;
        if belief >= self.header.n_beliefs {
            return Err(RejectReason::ClusterOutOfRange);
        }
        let community = raw
            .community
            .as_deref()
            .and_then(Community::from_code)
            .ok_or(RejectReason::UnknownCommunity)?;
        if timestamp < self.header.epoch
            || self.header.window_end().is_some_and(|end| timestamp >= end)
        {
            return Err(RejectReason::OutsideWindow);
        }
        match self.user_community.get(&user) {
            Some(&c) if c != community => return Err(RejectReason::CommunityConflict),
            Some(_) => {}
            None => {
                self.user_community.insert(user.clone(), community);
            }
        }
        Ok(BeliefEvent {
            user,
            timestamp,
            belief,
            community,
            is_amplifier: raw.amp.unwrap_or(false),
        })
    }

    /// Closes the tally. More than half the rows rejected is fatal.
    pub fn finish(self) -> Result<ValidationReport, DataError> {
        let n_rejected: u64 = self.rejected.values().sum();
        let total = n_rejected + self.n_events;
        if total > 0 && (n_rejected as f64) > MAX_REJECTED_FRACTION * total as f64 {
            return Err(DataError::SchemaMismatch {
                rejected: n_rejected,
                total,
            });
        }
        Ok(ValidationReport {
            n_events: self.n_events,
            n_users: self.user_community.len() as u64,
            n_rejected,
            rejection_reasons: self
                .rejected
                .iter()
                .map(|(r, &n)| (String::from(r.code()), n))
                .collect(),
            per_community_totals: self.per_community,
        })
    }
}

/// Dense index of a user in a [`UserTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserIdx(pub u32);

impl UserIdx {
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserInfo {
    pub id: String,
    pub community: Community,
    pub is_amplifier: bool,
}

/// Users sorted by id; the position is the [`UserIdx`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UserTable {
    users: Vec<UserInfo>,
}

impl UserTable {
    /// Sorts by id; `None` if an id repeats.
    pub fn from_users(mut users: Vec<UserInfo>) -> Option<Self> {
        users.sort_by(|a, b| a.id.cmp(&b.id));
        if users.windows(2).any(|w| w[0].id == w[1].id) {
            return None;
        }
        Some(Self { users })
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn get(&self, idx: UserIdx) -> &UserInfo {
        &self.users[idx.get()]
    }

    pub fn index_of(&self, id: &str) -> Option<UserIdx> {
        self.users
            .binary_search_by(|u| u.id.as_str().cmp(id))
            .ok()
            .map(|i| UserIdx(i as u32))
    }

    pub fn iter(&self) -> impl Iterator<Item = (UserIdx, &UserInfo)> {
        self.users
            .iter()
            .enumerate()
            .map(|(i, u)| (UserIdx(i as u32), u))
    }

    pub fn community(&self, idx: UserIdx) -> Community {
        self.users[idx.get()].community
    }

    pub fn amplifiers(&self) -> BTreeSet<UserIdx> {
        self.iter()
            .filter(|(_, u)| u.is_amplifier)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Event counts per (user, week, belief).
///
/// Weeks are the contiguous range `0..n_weeks`; weeks without events are
/// part of the range but hold no cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeeklyCounts {
    pub epoch: i64,
    pub n_beliefs: u32,
    n_weeks: u32,
    users: UserTable,
    cells: BTreeMap<(UserIdx, u32, u32), u32>,
}

impl WeeklyCounts {
    pub fn n_weeks(&self) -> u32 {
        self.n_weeks
    }

    pub fn weeks(&self) -> Range<u32> {
        0..self.n_weeks
    }

    pub fn users(&self) -> &UserTable {
        &self.users
    }

    /// Widens the week range to at least `n` weeks.
    pub fn extend_weeks(&mut self, n: u32) {
        self.n_weeks = self.n_weeks.max(n);
    }

    pub fn get(&self, user: UserIdx, week: u32, belief: u32) -> u32 {
        self.cells.get(&(user, week, belief)).copied().unwrap_or(0)
    }

    /// Non-zero cells in (user, week, belief) order.
    pub fn cells(&self) -> impl Iterator<Item = (UserIdx, u32, u32, u32)> + '_ {
        self.cells.iter().map(|(&(u, w, b), &n)| (u, w, b, n))
    }

    /// `(belief, count)` pairs for one user-week.
    pub fn user_week(&self, user: UserIdx, week: u32) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.cells
            .range((user, week, 0)..=(user, week, u32::MAX))
            .map(|(&(_, _, b), &n)| (b, n))
    }

    /// `(week, belief, count)` for one user.
    pub fn user_cells(&self, user: UserIdx) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        self.cells
            .range((user, 0, 0)..=(user, u32::MAX, u32::MAX))
            .map(|(&(_, w, b), &n)| (w, b, n))
    }

    /// Per user-week event totals in (user, week) order.
    pub fn user_week_totals(&self) -> BTreeMap<(UserIdx, u32), u64> {
        let mut out = BTreeMap::new();
        for (&(u, w, _), &n) in &self.cells {
            *out.entry((u, w)).or_insert(0) += u64::from(n);
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.cells.values().map(|&n| u64::from(n)).sum()
    }

    /// Event totals per community.
    pub fn community_totals(&self) -> [u64; 2] {
        let mut out = [0; 2];
        for (&(u, _, _), &n) in &self.cells {
            out[self.users.community(u).index()] += u64::from(n);
        }
        out
    }
}

/// Bins events into fixed seven-day weeks starting at `epoch`.
///
/// Input order does not matter. A user's amplifier flag is set if any of
/// its events carries it.
pub fn bin_weekly(
    events: &[BeliefEvent],
    epoch: i64,
    n_beliefs: u32,
) -> Result<WeeklyCounts, DataError> {
    let mut by_user: BTreeMap<&str, (Community, bool)> = BTreeMap::new();
    for e in events {
        if e.belief >= n_beliefs {
            return Err(DataError::ClusterOutOfRange {
                belief: e.belief,
                n_beliefs,
            });
        }
        let entry = by_user
            .entry(e.user.as_str())
            .or_insert((e.community, false));
        if entry.0 != e.community {
            return Err(DataError::CommunityConflict {
                user: e.user.clone(),
            });
        }
        entry.1 |= e.is_amplifier;
    }
    let users = UserTable {
        users: by_user
            .iter()
            .map(|(&id, &(community, is_amplifier))| UserInfo {
                id: String::from(id),
                community,
                is_amplifier,
            })
            .collect(),
    };

    let mut cells = BTreeMap::new();
    let mut n_weeks = 0;
    for e in events {
        let week = week_of(e.timestamp, epoch).ok_or_else(|| DataError::PreEpoch {
            user: e.user.clone(),
            timestamp: e.timestamp,
        })?;
        let user = users
            .index_of(&e.user)
            .expect("user table built from events");
        *cells.entry((user, week, e.belief)).or_insert(0u32) += 1;
        n_weeks = n_weeks.max(week + 1);
    }
    Ok(WeeklyCounts {
        epoch,
        n_beliefs,
        n_weeks,
        users,
        cells,
    })
}
