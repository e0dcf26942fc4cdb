//! Readers and writers for the on-disk formats.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use bld_core::beliefdyn::{BeliefVector, BeliefVectorSeries, SeriesEntry, SmoothingParams};
use bld_core::datamodel::{
    EventValidator, RawRecord, RejectReason, StreamHeader, UserInfo, UserTable, ValidationReport,
};
use bld_core::landscape::EmbeddingRow;
use bld_core::{BeliefEvent, Community, UserIdx};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::format::{num, Table};

pub const HEADER_PREFIX: &str = "#!";

#[derive(Serialize, Deserialize)]
struct HeaderJson {
    #[serde(rename = "B")]
    n_beliefs: u32,
    epoch: i64,
    communities: Communities,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weeks: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct Communities {
    #[serde(rename = "A")]
    a: String,
    #[serde(rename = "B")]
    b: String,
}

pub fn parse_header(line: &str) -> Result<StreamHeader> {
    let body = line.strip_prefix(HEADER_PREFIX).ok_or_else(|| {
        CliError::input("missing stream header (first line must start with \"#!\")")
    })?;
    let h: HeaderJson = serde_json::from_str(body)
        .map_err(|e| CliError::input(format!("bad stream header: {e}")))?;
    Ok(StreamHeader {
        n_beliefs: h.n_beliefs,
        epoch: h.epoch,
        community_names: [h.communities.a, h.communities.b],
        weeks: h.weeks,
    })
}

pub fn header_line(header: &StreamHeader) -> String {
    let h = HeaderJson {
        n_beliefs: header.n_beliefs,
        epoch: header.epoch,
        communities: Communities {
            a: header.community_names[0].clone(),
            b: header.community_names[1].clone(),
        },
        weeks: header.weeks,
    };
    format!(
        "{HEADER_PREFIX}{}",
        serde_json::to_string(&h).expect("header serializes")
    )
}

/// Reads a record leniently; wrong-typed fields become `None`.
pub fn raw_record(line: &str) -> Option<RawRecord> {
    let Value::Object(map) = serde_json::from_str::<Value>(line).ok()? else {
        return None;
    };
    let belief = match map.get("belief") {
        Some(Value::Number(n)) => n.as_i64().or_else(|| n.as_u64().map(|_| i64::MAX)),
        _ => None,
    };
    Some(RawRecord {
        user: map.get("user").and_then(Value::as_str).map(str::to_owned),
        ts: map.get("ts").and_then(Value::as_i64),
        belief,
        community: map
            .get("community")
            .and_then(Value::as_str)
            .map(str::to_owned),
        amp: map.get("amp").and_then(Value::as_bool),
    })
}

pub struct EventStream {
    pub header: StreamHeader,
    pub events: Vec<BeliefEvent>,
    pub report: ValidationReport,
}

/// Loads and validates an events file. Blank lines are skipped.
pub fn read_events(path: &Path) -> Result<EventStream> {
    let file = fs::File::open(path).map_err(|e| CliError::read(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .transpose()
        .map_err(|e| CliError::read(path, e))?
        .ok_or_else(|| CliError::read(path, "empty file"))?;
    let header = parse_header(&first).map_err(|e| CliError::read(path, e))?;
    let mut validator = EventValidator::new(&header);
    let mut events = Vec::new();
    for line in lines {
        let line = line.map_err(|e| CliError::read(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match raw_record(&line) {
            Some(raw) => events.extend(validator.check(raw)),
            None => validator.reject(RejectReason::MalformedRecord),
        }
    }
    let report = validator.finish().map_err(|e| CliError::read(path, e))?;
    Ok(EventStream {
        header,
        events,
        report,
    })
}

#[derive(Serialize)]
struct EventJson<'a> {
    user: &'a str,
    ts: i64,
    belief: u32,
    community: &'a str,
    amp: bool,
}

pub fn events_jsonl(header: &StreamHeader, events: &[BeliefEvent]) -> Vec<u8> {
    let mut out = header_line(header);
    out.push('\n');
    for e in events {
        let rec = EventJson {
            user: &e.user,
            ts: e.timestamp,
            belief: e.belief,
            community: e.community.code(),
            amp: e.is_amplifier,
        };
        out.push_str(&serde_json::to_string(&rec).expect("event serializes"));
        out.push('\n');
    }
    out.into_bytes()
}

#[derive(Deserialize)]
struct EmbeddingCsvRow {
    user: String,
    week: u32,
    x: f64,
    y: f64,
}

pub fn read_embedding(path: &Path) -> Result<Vec<EmbeddingRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::read(path, e))?;
    reader
        .deserialize::<EmbeddingCsvRow>()
        .map(|r| {
            r.map(|r| EmbeddingRow {
                user: r.user,
                week: r.week,
                x: r.x,
                y: r.y,
            })
            .map_err(|e| CliError::read(path, e))
        })
        .collect()
}

pub fn embedding_csv(rows: impl IntoIterator<Item = (String, u32, f64, f64)>) -> Vec<u8> {
    let mut t = Table::new(["user", "week", "x", "y"]);
    for (user, week, x, y) in rows {
        t.row([user, week.to_string(), num(x), num(y)]);
    }
    t.into_bytes()
}

/// One user id per line; blank lines and `#` comments are ignored.
pub fn read_amplifiers(path: &Path, users: &UserTable) -> Result<BTreeSet<UserIdx>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    let mut out = BTreeSet::new();
    for line in text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        let idx = users
            .index_of(line)
            .ok_or_else(|| CliError::read(path, format!("amplifier {line} has no events")))?;
        out.insert(idx);
    }
    Ok(out)
}

const VECTORS_MAGIC: &[u8; 4] = b"BLDV";
const VECTORS_VERSION: u32 = 1;

/// Little-endian dump of a belief-vector series. Only non-zero weights
/// are stored.
pub fn vectors_bin(series: &BeliefVectorSeries) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(VECTORS_MAGIC);
    out.extend_from_slice(&VECTORS_VERSION.to_le_bytes());
    out.extend_from_slice(&series.n_beliefs.to_le_bytes());
    out.extend_from_slice(&series.n_weeks.to_le_bytes());
    out.extend_from_slice(&series.params.half_life_weeks.to_le_bytes());
    out.extend_from_slice(&series.params.alpha.to_le_bytes());
    let users = series.users();
    out.extend_from_slice(&(users.len() as u32).to_le_bytes());
    for (_, u) in users.iter() {
        out.extend_from_slice(&(u.id.len() as u32).to_le_bytes());
        out.extend_from_slice(u.id.as_bytes());
        out.push(u.community.index() as u8);
        out.push(u8::from(u.is_amplifier));
    }
    out.extend_from_slice(&(series.len() as u64).to_le_bytes());
    for e in series.entries() {
        out.extend_from_slice(&e.user.0.to_le_bytes());
        out.extend_from_slice(&e.week.to_le_bytes());
        out.push(u8::from(e.active));
        let nz = e.vector.nonzero();
        out.extend_from_slice(&(nz.len() as u32).to_le_bytes());
        for (b, w) in nz {
            out.extend_from_slice(&b.to_le_bytes());
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(CliError::input("truncated vectors file"));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

pub fn parse_vectors_bin(bytes: &[u8]) -> Result<BeliefVectorSeries> {
    let mut c = Cursor { bytes };
    if c.take(4)? != VECTORS_MAGIC {
        return Err(CliError::input("not a vectors file"));
    }
    let version = c.u32()?;
    if version != VECTORS_VERSION {
        return Err(CliError::input(format!(
            "unsupported vectors file version {version}"
        )));
    }
    let n_beliefs = c.u32()?;
    let n_weeks = c.u32()?;
    let params = SmoothingParams {
        half_life_weeks: c.f64()?,
        alpha: c.f64()?,
    };
    let n_users = c.u32()?;
    let mut users = Vec::with_capacity(n_users as usize);
    for _ in 0..n_users {
        let len = c.u32()? as usize;
        let id = String::from_utf8(c.take(len)?.to_vec()).map_err(CliError::input)?;
        let community = if c.u8()? == 0 {
            Community::A
        } else {
            Community::B
        };
        let is_amplifier = c.u8()? != 0;
        users.push(UserInfo {
            id,
            community,
            is_amplifier,
        });
    }
    let users = UserTable::from_users(users)
        .ok_or_else(|| CliError::input("duplicate user in vectors file"))?;
    let n_entries = c.u64()?;
    let mut entries = Vec::new();
    for _ in 0..n_entries {
        let user = UserIdx(c.u32()?);
        let week = c.u32()?;
        let active = c.u8()? != 0;
        let nnz = c.u32()?;
        let mut vector = BeliefVector::zeros(n_beliefs);
        for _ in 0..nnz {
            let b = c.u32()?;
            let w = c.f64()?;
            if b >= n_beliefs || user.get() >= users.len() {
                return Err(CliError::input("vectors file index out of range"));
            }
            match &mut vector {
                BeliefVector::Dense(v) => v[b as usize] = w,
                BeliefVector::Sparse { entries, .. } => {
                    entries.insert(b, w);
                }
            }
        }
        entries.push(SeriesEntry {
            user,
            week,
            active,
            vector,
        });
    }
    if !c.bytes.is_empty() {
        return Err(CliError::input("trailing bytes in vectors file"));
    }
    Ok(BeliefVectorSeries::from_entries(
        n_beliefs, n_weeks, params, users, entries,
    ))
}

pub fn vectors_csv(series: &BeliefVectorSeries) -> Vec<u8> {
    let mut t = Table::new(["user", "week", "cluster", "weight"]);
    for e in series.entries() {
        let id = &series.users().get(e.user).id;
        for (b, w) in e.vector.nonzero() {
            t.row([id.clone(), e.week.to_string(), b.to_string(), num(w)]);
        }
    }
    t.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trip() {
        let line = r##"#!{"B":266,"epoch":1577836800,"communities":{"A":"BLM","B":"KPOP"}}"##;
        let h = parse_header(line).unwrap();
        assert_eq!(h.n_beliefs, 266);
        assert_eq!(h.community_names[1], "KPOP");
        assert_eq!(h.weeks, None);
        assert_eq!(header_line(&h), line);
        assert!(parse_header("{\"B\":3}").is_err());
    }

    #[test]
    fn lenient_records() {
        let r =
            raw_record(r#"{"user":"u1","ts":"yesterday","belief":2.5,"community":"A"}"#).unwrap();
        assert_eq!(r.user.as_deref(), Some("u1"));
        assert_eq!(r.ts, None);
        assert_eq!(r.belief, None);
        assert_eq!(r.amp, None);
        assert!(raw_record("[1,2]").is_none());
        assert!(raw_record("not json").is_none());
    }
}
