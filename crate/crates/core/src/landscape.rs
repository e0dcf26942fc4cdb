//! Belief landscape: embedded user-week points, density-peak attractors,
//! weekly assignment and per-attractor belief profiles.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::Range;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::beliefdyn::BeliefVectorSeries;
use crate::datamodel::{UserIdx, WeeklyCounts};

/// Seed of the start vectors used by [`fallback_project`].
pub const PROJECTION_SEED: u64 = 0x5eed_b1d0;

const POWER_ITERATIONS: usize = 1000;
const POWER_TOLERANCE: f64 = 1e-14;

/// Attractor id, or `None` for noise.
pub type Label = Option<u32>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LandscapeError {
    #[error("duplicate embedding point for user {user} week {week}")]
    DuplicatePoint { user: String, week: u32 },
    #[error("non-finite coordinate for user {user} week {week}")]
    NonFinite { user: String, week: u32 },
    #[error("degenerate projection: {0}")]
    DegenerateProjection(&'static str),
    #[error("no points to cluster")]
    Empty,
    #[error("cannot select {k} peaks from {eligible} eligible points")]
    TooManyPeaks { k: usize, eligible: usize },
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("attractor set is empty")]
    EmptyAttractorSet,
}

/// One user-week in the 2D landscape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmbeddedPoint {
    pub user: UserIdx,
    pub week: u32,
    pub x: f64,
    pub y: f64,
}

impl EmbeddedPoint {
    fn dist2(&self, other: &EmbeddedPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// A raw embedding row keyed by user id string.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingRow {
    pub user: String,
    pub week: u32,
    pub x: f64,
    pub y: f64,
}

/// Rows that did not match the belief-vector universe.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EmbeddingReport {
    pub n_points: usize,
    pub rejected_unknown_user: usize,
    pub rejected_no_vector: usize,
}

/// Points sorted by (user, week), one per key.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    points: Vec<EmbeddedPoint>,
}

impl Embedding {
    /// Sorts the points and rejects duplicate keys or non-finite coordinates.
    /// User ids in errors are rendered as indices.
    pub fn new(mut points: Vec<EmbeddedPoint>) -> Result<Self, LandscapeError> {
        points.sort_by_key(|p| (p.user, p.week));
        for p in &points {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(LandscapeError::NonFinite {
                    user: alloc::format!("#{}", p.user.0),
                    week: p.week,
                });
            }
        }
        if let Some(w) = points
            .windows(2)
            .find(|w| (w[0].user, w[0].week) == (w[1].user, w[1].week))
        {
            return Err(LandscapeError::DuplicatePoint {
                user: alloc::format!("#{}", w[0].user.0),
                week: w[0].week,
            });
        }
        Ok(Self { points })
    }

    /// Indexes raw rows against a belief-vector series. Rows naming an
    /// unknown user or a user-week without a vector are dropped and counted.
    pub fn from_rows(
        series: &BeliefVectorSeries,
        rows: impl IntoIterator<Item = EmbeddingRow>,
    ) -> Result<(Self, EmbeddingReport), LandscapeError> {
        let mut report = EmbeddingReport::default();
        let mut seen: BTreeMap<(String, u32), ()> = BTreeMap::new();
        let mut points = Vec::new();
        for row in rows {
            if seen.insert((row.user.clone(), row.week), ()).is_some() {
                return Err(LandscapeError::DuplicatePoint {
                    user: row.user,
                    week: row.week,
                });
            }
            if !(row.x.is_finite() && row.y.is_finite()) {
                return Err(LandscapeError::NonFinite {
                    user: row.user,
                    week: row.week,
                });
            }
            let Some(user) = series.users().index_of(&row.user) else {
                report.rejected_unknown_user += 1;
                continue;
            };
            if series.get(user, row.week).is_none() {
                report.rejected_no_vector += 1;
                continue;
            }
            points.push(EmbeddedPoint {
                user,
                week: row.week,
                x: row.x,
                y: row.y,
            });
        }
        report.n_points = points.len();
        Ok((Self::new(points)?, report))
    }

    pub fn points(&self) -> &[EmbeddedPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position(&self, user: UserIdx, week: u32) -> Option<usize> {
        self.points
            .binary_search_by(|p| (p.user, p.week).cmp(&(user, week)))
            .ok()
    }

    /// Diagonal of the bounding box.
    pub fn diagonal(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.points {
            lo[0] = lo[0].min(p.x);
            lo[1] = lo[1].min(p.y);
            hi[0] = hi[0].max(p.x);
            hi[1] = hi[1].max(p.y);
        }
        if self.points.is_empty() {
            return 0.0;
        }
        libm::hypot(hi[0] - lo[0], hi[1] - lo[1])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = libm::sqrt(dot(v, v));
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Mean-centered sparse data for covariance products.
struct Centered {
    rows: Vec<Vec<(u32, f64)>>,
    mean: Vec<f64>,
}

impl Centered {
    fn project(&self, row: &[(u32, f64)], v: &[f64], mean_dot: f64) -> f64 {
        row.iter().map(|&(b, x)| x * v[b as usize]).sum::<f64>() - mean_dot
    }

    /// `C v` for the scatter matrix of the centered rows.
    fn scatter_times(&self, v: &[f64]) -> Vec<f64> {
        let mean_dot = dot(&self.mean, v);
        let mut out = vec![0.0; v.len()];
        let mut total = 0.0;
        for row in &self.rows {
            let s = self.project(row, v, mean_dot);
            for &(b, x) in row {
                out[b as usize] += x * s;
            }
            total += s;
        }
        for (o, m) in out.iter_mut().zip(&self.mean) {
            *o -= m * total;
        }
        out
    }
}

fn power_iteration(
    data: &Centered,
    rng: &mut ChaCha8Rng,
    deflate: Option<&[f64]>,
) -> (Vec<f64>, f64) {
    let dim = data.mean.len();
    let orth = |v: &mut Vec<f64>| {
        if let Some(u) = deflate {
            let d = dot(v, u);
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= d * y);
        }
    };
    let mut v: Vec<f64> = (0..dim)
        .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        .collect();
    orth(&mut v);
    normalize(&mut v);
    let mut eigen = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let mut next = data.scatter_times(&v);
        orth(&mut next);
        eigen = normalize(&mut next);
        if eigen == 0.0 {
            break;
        }
        let diff: f64 = next.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
        v = next;
        if diff < POWER_TOLERANCE {
            break;
        }
    }
    // Sign convention: the largest-magnitude component is positive.
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (v, eigen)
}

/// Deterministic rank-2 linear projection of the belief vectors onto their
/// two leading principal axes.
///
/// The second axis is zero when the vectors span a single direction.
pub fn fallback_project(series: &BeliefVectorSeries) -> Result<Embedding, LandscapeError> {
    if series.is_empty() {
        return Err(LandscapeError::DegenerateProjection("empty series"));
    }
    let rows: Vec<Vec<(u32, f64)>> = series
        .entries()
        .iter()
        .map(|e| e.vector.nonzero())
        .collect();
    let first = &rows[0];
    if rows.iter().all(|r| r == first) {
        return Err(LandscapeError::DegenerateProjection(
            "all belief vectors are identical",
        ));
    }
    let dim = series.n_beliefs as usize;
    let mut mean = vec![0.0; dim];
    for row in &rows {
        for &(b, x) in row {
            mean[b as usize] += x;
        }
    }
    let n = rows.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    let data = Centered { rows, mean };

    let mut rng = ChaCha8Rng::seed_from_u64(PROJECTION_SEED);
    let (axis1, eigen1) = power_iteration(&data, &mut rng, None);
    if eigen1 <= 0.0 {
        return Err(LandscapeError::DegenerateProjection("zero variance"));
    }
    let (axis2, eigen2) = power_iteration(&data, &mut rng, Some(&axis1));
    // Relative threshold: below it the second axis is numerical residue.
    let has_second = eigen2 > eigen1 * 1e-12;

    let m1 = dot(&data.mean, &axis1);
    let m2 = dot(&data.mean, &axis2);
    let points = series
        .entries()
        .iter()
        .zip(&data.rows)
        .map(|(e, row)| EmbeddedPoint {
            user: e.user,
            week: e.week,
            x: data.project(row, &axis1, m1),
            y: if has_second {
                data.project(row, &axis2, m2)
            } else {
                0.0
            },
        })
        .collect();
    Embedding::new(points)
}

/// How peaks are chosen among the candidates ranked by `density * delta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PeakSelection {
    /// The `k` points with the largest `density * delta`.
    TopK(usize),
    /// Every point whose `density * delta` exceeds the threshold.
    GammaThreshold(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterConfig {
    /// Gaussian kernel bandwidth; `None` uses 1/20 of the bounding-box
    /// diagonal.
    pub bandwidth: Option<f64>,
    pub selection: PeakSelection,
    /// Points with density below this are noise.
    pub noise_floor: f64,
}

impl ClusterConfig {
    pub fn top_k(k: usize) -> Self {
        Self {
            bandwidth: None,
            selection: PeakSelection::TopK(k),
            noise_floor: 0.0,
        }
    }

    pub fn resolve_bandwidth(&self, embedding: &Embedding) -> Result<f64, LandscapeError> {
        let bw = self
            .bandwidth
            .unwrap_or_else(|| embedding.diagonal() / 20.0);
        if bw > 0.0 && bw.is_finite() {
            Ok(bw)
        } else {
            Err(LandscapeError::InvalidBandwidth(bw))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    /// Index of the peak point in the clustered embedding.
    pub point: usize,
    pub x: f64,
    pub y: f64,
    pub density: f64,
}

/// Density peaks and per-point labels for one embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct AttractorSet {
    /// Peaks ordered by decreasing density; the position is the attractor id.
    pub peaks: Vec<Peak>,
    pub bandwidth: f64,
    pub config: ClusterConfig,
    /// Label per point, aligned with the clustered embedding.
    pub labels: Vec<Label>,
    pub density: Vec<f64>,
    /// Nearest higher-density neighbor of each point; `None` for the global
    /// density maximum.
    pub parent: Vec<Option<usize>>,
    pub members: Vec<u64>,
}

impl AttractorSet {
    pub fn k(&self) -> usize {
        self.peaks.len()
    }

    /// Follows the higher-density chain from `point` to its first peak.
    pub fn chain_root(&self, point: usize) -> Option<usize> {
        let is_peak = |i: usize| self.peaks.iter().any(|p| p.point == i);
        let mut cur = point;
        for _ in 0..=self.labels.len() {
            if is_peak(cur) {
                return Some(cur);
            }
            cur = self.parent[cur]?;
        }
        None
    }
}

fn kernel_density(points: &[EmbeddedPoint], bandwidth: f64) -> Vec<f64> {
    let scale = -0.5 / (bandwidth * bandwidth);
    let n = points.len();
    let mut rho = vec![0.0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let k = libm::exp(points[i].dist2(&points[j]) * scale);
            rho[i] += k;
            rho[j] += k;
        }
    }
    rho
}

/// Density-peak clustering with a Gaussian kernel.
///
/// Density is the kernel sum over all other points. Every point points at
/// its nearest neighbor of higher density (density ties rank the lower
/// index higher; distance ties pick the lower index). Peaks are chosen by
/// `density * delta`; the global density maximum is always a peak so that
/// every chain terminates. Non-peaks inherit their parent's label.
pub fn density_peak_cluster(
    embedding: &Embedding,
    cfg: &ClusterConfig,
) -> Result<AttractorSet, LandscapeError> {
    let points = embedding.points();
    let n = points.len();
    if n == 0 {
        return Err(LandscapeError::Empty);
    }
    if let PeakSelection::TopK(k) = cfg.selection {
        if k == 0 || k > n {
            return Err(LandscapeError::TooManyPeaks { k, eligible: n });
        }
    }
    let bandwidth = cfg.resolve_bandwidth(embedding)?;
    let density = kernel_density(points, bandwidth);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        density[b]
            .partial_cmp(&density[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut parent = vec![None; n];
    let mut delta = vec![0.0; n];
    for (rank, &i) in order.iter().enumerate() {
        if rank == 0 {
            delta[i] = points
                .iter()
                .map(|p| p.dist2(&points[i]))
                .fold(0.0, f64::max);
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for &j in &order[..rank] {
            let d = points[i].dist2(&points[j]);
            let better = match best {
                None => true,
                Some((bd, bj)) => d < bd || (d == bd && j < bj),
            };
            if better {
                best = Some((d, j));
            }
        }
        let (d, j) = best.expect("rank > 0 has a higher point");
        delta[i] = d;
        parent[i] = Some(j);
    }
    let delta: Vec<f64> = delta.into_iter().map(libm::sqrt).collect();
    let gamma: Vec<f64> = density.iter().zip(&delta).map(|(r, d)| r * d).collect();

    let eligible: Vec<usize> = (0..n).filter(|&i| density[i] >= cfg.noise_floor).collect();
    let top = order[0];
    let mut peaks: Vec<usize> = match cfg.selection {
        PeakSelection::TopK(k) => {
            if k > eligible.len() {
                return Err(LandscapeError::TooManyPeaks {
                    k,
                    eligible: eligible.len(),
                });
            }
            let mut ranked = eligible.clone();
            ranked.sort_by(|&a, &b| {
                gamma[b]
                    .partial_cmp(&gamma[a])
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
            ranked.truncate(k);
            if !ranked.contains(&top) {
                ranked.pop();
                ranked.push(top);
            }
            ranked
        }
        PeakSelection::GammaThreshold(t) => {
            let mut chosen: Vec<usize> =
                eligible.iter().copied().filter(|&i| gamma[i] > t).collect();
            if density[top] >= cfg.noise_floor && !chosen.contains(&top) {
                chosen.push(top);
            }
            chosen
        }
    };
    if peaks.is_empty() {
        return Err(LandscapeError::TooManyPeaks { k: 1, eligible: 0 });
    }
    let rank_of = {
        let mut r = vec![0usize; n];
        for (rank, &i) in order.iter().enumerate() {
            r[i] = rank;
        }
        r
    };
    peaks.sort_by_key(|&i| rank_of[i]);

    let mut labels: Vec<Label> = vec![None; n];
    for (id, &p) in peaks.iter().enumerate() {
        labels[p] = Some(id as u32);
    }
    for &i in &order {
        if density[i] < cfg.noise_floor || labels[i].is_some() {
            continue;
        }
        labels[i] = parent[i].and_then(|p| labels[p]);
    }
    let mut members = vec![0u64; peaks.len()];
    for l in labels.iter().flatten() {
        members[*l as usize] += 1;
    }
    Ok(AttractorSet {
        peaks: peaks
            .iter()
            .map(|&i| Peak {
                point: i,
                x: points[i].x,
                y: points[i].y,
                density: density[i],
            })
            .collect(),
        bandwidth,
        config: *cfg,
        labels,
        density,
        parent,
        members,
    })
}

/// Attractor label per user-week.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentTable {
    pub k: u32,
    entries: BTreeMap<(UserIdx, u32), Label>,
}

impl AssignmentTable {
    pub fn from_entries(k: u32, entries: BTreeMap<(UserIdx, u32), Label>) -> Self {
        Self { k, entries }
    }

    /// The clustering labels of the embedding the set was built on.
    pub fn from_clustering(embedding: &Embedding, set: &AttractorSet) -> Self {
        Self {
            k: set.k() as u32,
            entries: embedding
                .points()
                .iter()
                .zip(&set.labels)
                .map(|(p, &l)| ((p.user, p.week), l))
                .collect(),
        }
    }

    pub fn get(&self, user: UserIdx, week: u32) -> Option<Label> {
        self.entries.get(&(user, week)).copied()
    }

    /// `(user, week, label)` in (user, week) order.
    pub fn iter(&self) -> impl Iterator<Item = (UserIdx, u32, Label)> + '_ {
        self.entries.iter().map(|(&(u, w), &l)| (u, w, l))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Most frequent non-noise label per user over `weeks`; ties go to the
    /// lower attractor id. Users with no labeled week get `None`.
    pub fn modal_labels(&self, n_users: usize, weeks: Range<u32>) -> Vec<Label> {
        let mut tallies: Vec<BTreeMap<u32, u32>> = vec![BTreeMap::new(); n_users];
        for (u, w, l) in self.iter() {
            if let (Some(a), true) = (l, weeks.contains(&w)) {
                *tallies[u.get()].entry(a).or_insert(0) += 1;
            }
        }
        tallies
            .iter()
            .map(|t| {
                t.iter()
                    .fold(None, |best: Option<(u32, u32)>, (&a, &c)| match best {
                        Some((_, bc)) if bc >= c => best,
                        _ => Some((a, c)),
                    })
                    .map(|(a, _)| a)
            })
            .collect()
    }
}

/// Assigns each point of `points` to an attractor.
///
/// Points that were part of the clustering keep their clustering label.
/// Any other point takes the label of its nearest non-noise clustered point;
/// equal distances resolve to the lower attractor id.
pub fn assign_weekly(
    clustered: &Embedding,
    set: &AttractorSet,
    points: &Embedding,
) -> Result<AssignmentTable, LandscapeError> {
    if set.k() == 0 {
        return Err(LandscapeError::EmptyAttractorSet);
    }
    let labeled: Vec<(&EmbeddedPoint, u32)> = clustered
        .points()
        .iter()
        .zip(&set.labels)
        .filter_map(|(p, l)| l.map(|a| (p, a)))
        .collect();
    let mut entries = BTreeMap::new();
    for p in points.points() {
        if let Some(i) = clustered.position(p.user, p.week) {
            let q = &clustered.points()[i];
            if q.x == p.x && q.y == p.y {
                entries.insert((p.user, p.week), set.labels[i]);
                continue;
            }
        }
        let mut best: Option<(f64, u32)> = None;
        for &(q, a) in &labeled {
            let d = p.dist2(q);
            let better = match best {
                None => true,
                Some((bd, ba)) => d < bd || (d == bd && a < ba),
            };
            if better {
                best = Some((d, a));
            }
        }
        entries.insert((p.user, p.week), best.map(|(_, a)| a));
    }
    Ok(AssignmentTable {
        k: set.k() as u32,
        entries,
    })
}

/// Relative belief frequency of one attractor.
#[derive(Clone, Debug, PartialEq)]
pub struct AttractorProfile {
    pub attractor: u32,
    /// Length `B`, sums to 1.
    pub frequency: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileSet {
    pub profiles: Vec<AttractorProfile>,
    /// Attractors with no assigned activity in the window.
    pub empty: Vec<u32>,
}

impl ProfileSet {
    pub fn get(&self, attractor: u32) -> Option<&AttractorProfile> {
        self.profiles.iter().find(|p| p.attractor == attractor)
    }
}

/// Belief frequencies pooled over the user-weeks assigned to each
/// attractor within `weeks`.
pub fn attractor_profiles(
    assignments: &AssignmentTable,
    counts: &WeeklyCounts,
    weeks: Range<u32>,
) -> ProfileSet {
    let k = assignments.k as usize;
    let b = counts.n_beliefs as usize;
    let mut sums = vec![vec![0.0f64; b]; k];
    for (u, w, belief, n) in counts.cells() {
        if !weeks.contains(&w) {
            continue;
        }
        if let Some(Some(a)) = assignments.get(u, w) {
            sums[a as usize][belief as usize] += f64::from(n);
        }
    }
    let mut profiles = Vec::new();
    let mut empty = Vec::new();
    for (a, mut freq) in sums.into_iter().enumerate() {
        let total: f64 = freq.iter().sum();
        if total > 0.0 {
            freq.iter_mut().for_each(|x| *x /= total);
            profiles.push(AttractorProfile {
                attractor: a as u32,
                frequency: freq,
            });
        } else {
            empty.push(a as u32);
        }
    }
    ProfileSet { profiles, empty }
}
