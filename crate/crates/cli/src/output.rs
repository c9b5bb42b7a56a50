//! Rendering of a finished run as JSON, CSV or aligned text.
//!
//! Every non-integer number passes through [`fmt9`] before it is written,
//! so the three formats print the same digits and repeated runs produce
//! identical bytes.

use std::str::FromStr;

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Human,
    Csv,
    Json,
}

/// A run ready for rendering.
pub struct Report {
    pub config: Value,
    pub result: Value,
    pub diagnostics: Value,
    /// Flat records, one CSV line each.
    pub rows: Vec<Value>,
    /// Columns shown by the text layout; all when `None`.
    pub human_columns: Option<&'static [&'static str]>,
}

/// Nine significant digits, fixed notation for exponents in `-5..9` and
/// scientific notation otherwise. Trailing zeros are kept.
pub fn fmt9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        format!("{:.*}", (8 - exp) as usize, x)
    } else {
        format!("{mantissa}e{exp}")
    }
}

/// Rewrites every non-integer number in `v` with [`fmt9`].
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => match n.as_f64() {
            Some(x) if x.is_finite() => Value::Number(Number::from_str(&fmt9(x)).expect("fmt9 emits JSON numbers")),
            _ => Value::Null,
        },
        Value::Array(items) => Value::Array(items.into_iter().map(normalize).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

pub fn to_json(report: &Report) -> String {
    let mut doc = Map::new();
    doc.insert("config".into(), normalize(report.config.clone()));
    doc.insert("result".into(), normalize(report.result.clone()));
    doc.insert("diagnostics".into(), normalize(report.diagnostics.clone()));
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("values serialize");
    s.push('\n');
    s
}

/// Flattens nested objects into dotted keys; arrays are left out.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(_) => {}
        Value::Null => out.push((prefix.into(), String::new())),
        Value::String(s) => out.push((prefix.into(), s.clone())),
        other => out.push((prefix.into(), other.to_string())),
    }
}

pub fn to_csv(report: &Report) -> String {
    let flat: Vec<Vec<(String, String)>> = report
        .rows
        .iter()
        .map(|r| {
            let mut cells = Vec::new();
            flatten("", &normalize(r.clone()), &mut cells);
            cells
        })
        .collect();
    let mut header: Vec<String> = Vec::new();
    for cells in &flat {
        for (k, _) in cells {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for cells in &flat {
        let line: Vec<&str> = header
            .iter()
            .map(|h| cells.iter().find(|(k, _)| k == h).map_or("", |(_, v)| v.as_str()))
            .collect();
        w.write_record(&line).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(" "),
        Value::Object(map) => map
            .iter()
            .map(|(k, v)| format!("{k}={}", scalar(v)))
            .collect::<Vec<_>>()
            .join(" "),
        other => other.to_string(),
    }
}

fn key_values(title: &str, v: &Value, out: &mut String) {
    let Value::Object(map) = v else { return };
    if map.is_empty() {
        return;
    }
    let width = map.keys().map(|k| k.len()).max().unwrap_or(0);
    out.push_str(&format!("{title}\n"));
    for (k, v) in map {
        out.push_str(&format!("  {k:<width$}  {}\n", scalar(v)));
    }
}

fn aligned(rows: &[Value], columns: Option<&[&str]>, out: &mut String) {
    let mut flat: Vec<Vec<(String, String)>> = Vec::new();
    for r in rows {
        let mut cells = Vec::new();
        flatten("", r, &mut cells);
        flat.push(cells);
    }
    let mut header: Vec<String> = Vec::new();
    for cells in &flat {
        for (k, _) in cells {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    if let Some(keep) = columns {
        header.retain(|h| keep.contains(&h.as_str()));
    }
    let lines: Vec<Vec<String>> = flat
        .iter()
        .map(|cells| {
            header
                .iter()
                .map(|h| match cells.iter().find(|(k, _)| k == h) {
                    Some((_, v)) if !v.is_empty() => v.clone(),
                    _ => "-".into(),
                })
                .collect()
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| lines.iter().map(|l| l[i].len()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let render = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&render(&header));
    out.push('\n');
    for l in &lines {
        out.push_str(&render(l));
        out.push('\n');
    }
}

pub fn to_human(report: &Report, tabular: bool) -> String {
    let mut out = String::new();
    key_values("config", &normalize(report.config.clone()), &mut out);
    if tabular {
        let rows: Vec<Value> = report.rows.iter().cloned().map(normalize).collect();
        aligned(&rows, report.human_columns, &mut out);
    } else {
        key_values("result", &normalize(report.result.clone()), &mut out);
    }
    key_values("diagnostics", &normalize(report.diagnostics.clone()), &mut out);
    out
}
