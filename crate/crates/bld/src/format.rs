//! Number formatting and in-memory CSV/JSON rendering.
//!
//! Every number is rounded to 9 significant digits and then printed in its
//! shortest round-trip form, so files diff cleanly across platforms.

use serde_json::Value;

use crate::error::{CliError, Result};

/// `x` rounded to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round9(x);
    // Normalize negative zero.
    if r == 0.0 {
        "0".into()
    } else {
        r.to_string()
    }
}

/// Empty cell for `None`.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn opt_id(x: Option<u32>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// A CSV file assembled in memory.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<I, S>(header: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

/// Rounds every float in a JSON tree to 9 significant digits.
pub fn round_json(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n
                .as_f64()
                .and_then(|x| serde_json::Number::from_f64(round9(x)))
            {
                *n = x;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn json_bytes(value: &impl serde::Serialize) -> Result<Vec<u8>> {
    let mut v = serde_json::to_value(value).map_err(CliError::internal)?;
    round_json(&mut v);
    let mut out = serde_json::to_vec_pretty(&v).map_err(CliError::internal)?;
    out.push(b'\n');
    Ok(out)
}
