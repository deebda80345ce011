//! Metrics rows and their CSV rendering.

use std::io::Write;

use crate::error::{Error, Result};

pub const HEADER: &str = "tick,scope,metric,value";
pub const END_MARKER: &str = "# end";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub tick: u64,
    pub scope: String,
    pub metric: String,
    pub value: f64,
}

/// Append-only row collector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub rows: Vec<MetricsRow>,
}

impl Metrics {
    pub fn push(&mut self, tick: u64, scope: impl Into<String>, metric: impl Into<String>, value: f64) {
        self.rows.push(MetricsRow {
            tick,
            scope: scope.into(),
            metric: metric.into(),
            value,
        });
    }

    /// Values of one series in row order.
    pub fn series(&self, scope: &str, metric: &str) -> Vec<(u64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.scope == scope && r.metric == metric)
            .map(|r| (r.tick, r.value))
            .collect()
    }

    pub fn last(&self, scope: &str, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .rev()
            .find(|r| r.scope == scope && r.metric == metric)
            .map(|r| r.value)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        write_csv(&mut out, &self.rows)?;
        Ok(out)
    }
}

/// C-style `%.9g`: 9 significant digits, trailing zeros removed.
pub fn format_g9(v: f64) -> String {
    const P: i32 = 9;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let x: i32 = exp.parse().expect("exponent digits");
    if (-4..P).contains(&x) {
        let fixed = format!("{:.*}", (P - 1 - x) as usize, v);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if x < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), x.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn check_field(s: &str) -> Result<()> {
    if s.is_empty() || s.contains([',', '\n', '\r', '"']) {
        return Err(Error::contract(format!("metrics field {s:?} must be non-empty without commas, quotes or newlines")));
    }
    Ok(())
}

/// Writes header, rows and end marker; returns the byte count. Ordering and
/// field checks happen before any byte is written.
pub fn write_csv<W: Write>(mut sink: W, rows: &[MetricsRow]) -> Result<usize> {
    for pair in rows.windows(2) {
        if pair[1].tick < pair[0].tick {
            return Err(Error::contract(format!(
                "metrics rows out of order: tick {} after {}",
                pair[1].tick, pair[0].tick
            )));
        }
    }
    for r in rows {
        check_field(&r.scope)?;
        check_field(&r.metric)?;
    }
    let mut text = String::with_capacity(32 * rows.len() + 32);
    text.push_str(HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&format!("{},{},{},{}\n", r.tick, r.scope, r.metric, format_g9(r.value)));
    }
    text.push_str(END_MARKER);
    text.push('\n');
    sink.write_all(text.as_bytes())?;
    sink.flush()?;
    Ok(text.len())
}
