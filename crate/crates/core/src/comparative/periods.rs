use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use super::ComparativeError;

/// A named, inclusive week range; `end: None` runs to the end of the study.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Period {
    pub name: String,
    pub start: u32,
    pub end: Option<u32>,
}

/// Ordered, disjoint named periods.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodSpec {
    periods: Vec<Period>,
}

impl PeriodSpec {
    pub fn new(periods: Vec<Period>) -> Result<Self, ComparativeError> {
        if periods.is_empty() {
            return Err(ComparativeError::InvalidPeriods("no periods".to_string()));
        }
        for (i, p) in periods.iter().enumerate() {
            if p.name.is_empty() {
                return Err(ComparativeError::InvalidPeriods(
                    "unnamed period".to_string(),
                ));
            }
            match p.end {
                Some(end) if end < p.start => {
                    return Err(ComparativeError::InvalidPeriods(format!(
                        "{} ends before it starts",
                        p.name
                    )));
                }
                None if i + 1 != periods.len() => {
                    return Err(ComparativeError::InvalidPeriods(format!(
                        "only the last period may be open-ended, not {}",
                        p.name
                    )));
                }
                _ => {}
            }
            if let Some(next) = periods.get(i + 1) {
                if p.end.is_none_or(|end| end >= next.start) {
                    return Err(ComparativeError::InvalidPeriods(format!(
                        "{} and {} overlap or are out of order",
                        p.name, next.name
                    )));
                }
            }
            if periods[..i].iter().any(|q| q.name == p.name) {
                return Err(ComparativeError::InvalidPeriods(format!(
                    "duplicate period {}",
                    p.name
                )));
            }
        }
        Ok(Self { periods })
    }

    /// Pre / event / post around an event in week 20: `0..19`, `20..23`,
    /// `24..`.
    pub fn default_three() -> Self {
        Self::parse("pre=0..19,event=20..23,post=24..").expect("valid default")
    }

    /// Parses `name=start..end` items separated by commas. Ends are
    /// inclusive; `start..` is open-ended.
    pub fn parse(text: &str) -> Result<Self, ComparativeError> {
        let bad = |item: &str| ComparativeError::InvalidPeriods(format!("cannot parse {item:?}"));
        let mut periods = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, range) = item.split_once('=').ok_or_else(|| bad(item))?;
            let (start, end) = range.split_once("..").ok_or_else(|| bad(item))?;
            let start: u32 = start.trim().parse().map_err(|_| bad(item))?;
            let end = match end.trim() {
                "" => None,
                e => Some(e.parse::<u32>().map_err(|_| bad(item))?),
            };
            periods.push(Period {
                name: name.trim().to_string(),
                start,
                end,
            });
        }
        Self::new(periods)
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    /// Half-open week ranges clipped to `0..n_weeks`. Periods wholly outside
    /// the window are an error.
    pub fn resolve(&self, n_weeks: u32) -> Result<Vec<(String, Range<u32>)>, ComparativeError> {
        self.periods
            .iter()
            .map(|p| {
                let end = p.end.map_or(n_weeks, |e| e.saturating_add(1).min(n_weeks));
                if p.start >= end {
                    Err(ComparativeError::EmptyPeriod(p.name.clone()))
                } else {
                    Ok((p.name.clone(), p.start..end))
                }
            })
            .collect()
    }
}

impl fmt::Display for PeriodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.periods.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}={}..", p.name, p.start)?;
            if let Some(end) = p.end {
                write!(f, "{end}")?;
            }
        }
        Ok(())
    }
}
