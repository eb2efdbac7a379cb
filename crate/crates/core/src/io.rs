//! Curve serialization. Numbers are written in the shortest form that parses back to
//! the same `f64`, so a write/read round trip is exact.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{invalid, Result};
use crate::model::{Lookahead, LmmseCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(invalid("format", format!("expected csv or json, got {other:?}"))),
        }
    }
}

/// Lossless decimal text for `v`; infinities become `inf` / `-inf`.
pub fn format_number(v: f64) -> String {
    Lookahead(v).to_string()
}

/// A JSON number, or a string for values JSON cannot hold.
pub fn json_number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::String(format_number(v))
    }
}

pub fn curve_to_json(curve: &LmmseCurve) -> Value {
    let points: Vec<Value> = curve
        .points
        .iter()
        .map(|&(d, v)| json!({ "d": json_number(d), "value": json_number(v) }))
        .collect();
    json!({
        "cmmse": json_number(curve.cmmse),
        "mmse": json_number(curve.mmse),
        "var0": json_number(curve.var0),
        "points": points,
    })
}

/// Writes `curve` as CSV (header `d,value`) or JSON (points plus the anchors).
pub fn emit_curve<W: Write>(curve: &LmmseCurve, format: OutputFormat, out: &mut W) -> io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(out, "d,value")?;
            for &(d, v) in &curve.points {
                writeln!(out, "{},{}", format_number(d), format_number(v))?;
            }
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &curve_to_json(curve))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Reads the `d,value` CSV written by [`emit_curve`].
pub fn read_curve_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "d,value" => {}
        other => return Err(invalid("csv", format!("expected header \"d,value\", got {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| invalid("csv", format!("row {} needs two columns", i + 1)))?;
            let d: Lookahead = a.trim().parse()?;
            let v: Lookahead = b.trim().parse()?;
            Ok((d.0, v.0))
        })
        .collect()
}

/// Fixed-width text table: one header row and right-aligned cells.
pub fn format_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(headers.to_vec());
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}
