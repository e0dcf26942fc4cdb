use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use super::ComparativeError;
use crate::datamodel::Community;
use crate::events::AttractorActivity;
use crate::stats::{normal_quantile, two_sided_p};

/// `|r|` is clamped to `1 - R_CLAMP` before the Fisher transform.
pub const R_CLAMP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationResult {
    pub r: f64,
    pub n: usize,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
}

fn fisher_z(r: f64) -> f64 {
    libm::atanh(r.clamp(-1.0 + R_CLAMP, 1.0 - R_CLAMP))
}

/// Pearson's r.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, ComparativeError> {
    if xs.len() != ys.len() {
        return Err(ComparativeError::MismatchedUniverse(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(ComparativeError::UndefinedCorrelation("no samples"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(ComparativeError::UndefinedCorrelation("zero variance"));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Fisher-z interval `tanh(atanh(r) -+ z_(1+conf)/2 / sqrt(n - 3))`.
pub fn fisher_interval(r: f64, n: usize, confidence: f64) -> Result<(f64, f64), ComparativeError> {
    if n <= 3 {
        return Err(ComparativeError::TooFewSamples(n));
    }
    let z = fisher_z(r);
    let half = normal_quantile(0.5 + confidence / 2.0) / libm::sqrt((n - 3) as f64);
    Ok((libm::tanh(z - half), libm::tanh(z + half)))
}

/// Pearson's r with a Fisher-z confidence interval.
pub fn pearson_ci(
    xs: &[f64],
    ys: &[f64],
    confidence: f64,
) -> Result<CorrelationResult, ComparativeError> {
    if xs.len() < 4 {
        return Err(ComparativeError::TooFewSamples(xs.len()));
    }
    let r = pearson(xs, ys)?;
    let (ci_low, ci_high) = fisher_interval(r, xs.len(), confidence)?;
    Ok(CorrelationResult {
        r,
        n: xs.len(),
        ci_low: ci_low.min(r),
        ci_high: ci_high.max(r),
        confidence,
    })
}

/// Two-sided p-value of the Fisher-z test for a difference between two
/// independent correlations.
pub fn compare_correlations(
    a: &CorrelationResult,
    b: &CorrelationResult,
) -> Result<f64, ComparativeError> {
    for n in [a.n, b.n] {
        if n <= 3 {
            return Err(ComparativeError::TooFewSamples(n));
        }
    }
    let se = libm::sqrt(1.0 / (a.n - 3) as f64 + 1.0 / (b.n - 3) as f64);
    Ok(two_sided_p((fisher_z(a.r) - fisher_z(b.r)) / se))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActivityMode {
    /// One row per attractor: mean weekly events in the period.
    PerAttractorMean,
    /// One row per (attractor, week) cell.
    PerWeekCells,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActivityRow {
    pub attractor: u32,
    /// `None` for per-attractor means.
    pub week: Option<u32>,
    /// Indexed by [`Community::index`].
    pub values: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActivityMatrix {
    pub mode: ActivityMode,
    pub rows: Vec<ActivityRow>,
}

impl ActivityMatrix {
    pub fn column(&self, c: Community) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[c.index()]).collect()
    }
}

/// Tweet activity per attractor and community inside `weeks`.
pub fn period_activity_matrix(
    activity: &AttractorActivity,
    weeks: Range<u32>,
    mode: ActivityMode,
) -> Result<ActivityMatrix, ComparativeError> {
    let weeks = weeks.start..weeks.end.min(activity.n_weeks);
    if weeks.is_empty() {
        return Err(ComparativeError::EmptyPeriod(alloc::format!(
            "{}..{}",
            weeks.start,
            weeks.end
        )));
    }
    let mut rows = Vec::new();
    for a in 0..activity.k {
        let cell = |w: u32| Community::ALL.map(|c| activity.get(c, a, w) as f64);
        match mode {
            ActivityMode::PerAttractorMean => {
                let mut sum = [0.0; 2];
                for w in weeks.clone() {
                    let v = cell(w);
                    sum[0] += v[0];
                    sum[1] += v[1];
                }
                let len = weeks.len() as f64;
                rows.push(ActivityRow {
                    attractor: a,
                    week: None,
                    values: sum.map(|s| s / len),
                });
            }
            ActivityMode::PerWeekCells => {
                for w in weeks.clone() {
                    rows.push(ActivityRow {
                        attractor: a,
                        week: Some(w),
                        values: cell(w),
                    });
                }
            }
        }
    }
    Ok(ActivityMatrix { mode, rows })
}

/// Which series a correlation row compares.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CorrelationGroup {
    /// One community across two periods.
    Within(Community),
    /// The two communities inside one period.
    Between,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationRow {
    pub group: CorrelationGroup,
    /// `first/second` for within-community rows, the period name otherwise.
    pub period: String,
    pub result: CorrelationResult,
}

/// Within-community correlations of per-attractor period means for every
/// period pair, then between-community correlations over per-week cells
/// of each period.
pub fn correlation_report(
    activity: &AttractorActivity,
    periods: &[(String, Range<u32>)],
    confidence: f64,
) -> Result<Vec<CorrelationRow>, ComparativeError> {
    let means = periods
        .iter()
        .map(|(_, w)| period_activity_matrix(activity, w.clone(), ActivityMode::PerAttractorMean))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for c in Community::ALL {
        for i in 0..periods.len() {
            for j in (i + 1)..periods.len() {
                rows.push(CorrelationRow {
                    group: CorrelationGroup::Within(c),
                    period: alloc::format!("{}/{}", periods[i].0, periods[j].0),
                    result: pearson_ci(&means[i].column(c), &means[j].column(c), confidence)?,
                });
            }
        }
    }
    for (name, weeks) in periods {
        let cells = period_activity_matrix(activity, weeks.clone(), ActivityMode::PerWeekCells)?;
        rows.push(CorrelationRow {
            group: CorrelationGroup::Between,
            period: name.clone(),
            result: pearson_ci(
                &cells.column(Community::A),
                &cells.column(Community::B),
                confidence,
            )?,
        });
    }
    Ok(rows)
}
