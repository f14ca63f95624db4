use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::config::OutputFormat;
use super::run::RunRecord;

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// CSV text: an optional parameter column, then the record's row columns.
pub fn to_csv(records: &[RunRecord]) -> Result<String> {
    let first = records
        .first()
        .ok_or_else(|| Error::Config("nothing to report".into()))?;
    let labels: Vec<String> = first.row().into_iter().map(|(l, _)| l).collect();
    let param = first.parameter.as_ref().map(|(n, _)| n.clone());
    let mut out = String::new();
    if let Some(p) = &param {
        out.push_str(p);
        out.push(',');
    }
    out.push_str(&labels.join(","));
    out.push('\n');
    for rec in records {
        let row = rec.row();
        if row.len() != labels.len() || row.iter().zip(&labels).any(|((l, _), m)| l != m) {
            return Err(Error::Config("records in one report must share a mode".into()));
        }
        let mut cells = Vec::with_capacity(row.len() + 1);
        if param.is_some() {
            let v = rec.parameter.as_ref().map(|(_, v)| v.as_str()).unwrap_or("");
            cells.push(v.to_string());
        }
        cells.extend(row.iter().map(|(_, v)| num(*v)));
        let _ = writeln!(out, "{}", cells.join(","));
    }
    Ok(out)
}

pub fn to_json(records: &[RunRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Config("nothing to report".into()));
    }
    serde_json::to_string_pretty(records).map_err(|e| Error::Parse(e.to_string()))
}

pub fn render(records: &[RunRecord], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => to_csv(records),
        OutputFormat::Json => to_json(records),
    }
}

/// Writes the report to `path`.
pub fn emit_report(records: &[RunRecord], format: OutputFormat, path: &Path) -> Result<()> {
    let text = render(records, format)?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json(path: &Path) -> Result<Vec<RunRecord>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
}
