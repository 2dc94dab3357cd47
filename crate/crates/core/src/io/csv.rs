use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{read_bytes, write_atomic};
use crate::error::{Error, Result};
use crate::geometry::{sort_records, EllipseParams, EllipseRecord};

pub const CSV_HEADER: [&str; 6] = ["slice", "cx", "cy", "semi_major", "semi_minor", "theta_rad"];

#[derive(Debug, Deserialize)]
struct Row {
    slice: usize,
    cx: f64,
    cy: f64,
    semi_major: f64,
    semi_minor: f64,
    theta_rad: f64,
}

/// A record that was not canonical in the file and has been rewritten.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvWarning {
    pub line: u64,
    pub message: String,
}

// The reader reports a record as starting at the blank lines before it, so
// skip those and count newlines up to the first byte of the record itself.
fn line_at(text: &[u8], byte: u64) -> u64 {
    let mut end = (byte as usize).min(text.len());
    while end < text.len() && matches!(text[end], b'\n' | b'\r') {
        end += 1;
    }
    1 + text[..end].iter().filter(|&&b| b == b'\n').count() as u64
}

/// Parses ellipse records, canonicalizing each one.
///
/// Returns the records sorted by slice together with one warning per record
/// that had to be rewritten (axes swapped or angle reduced).
pub fn parse_ellipse_csv(text: &[u8]) -> Result<(Vec<EllipseRecord>, Vec<CsvWarning>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text);
    let header = reader
        .headers()
        .map_err(|e| Error::ParseError {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::ParseError {
            line: 1,
            message: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for result in reader.records() {
        let parse_error = |e: csv::Error| Error::ParseError {
            line: e.position().map_or(0, |p| line_at(text, p.byte())),
            message: e.to_string(),
        };
        let raw = result.map_err(parse_error)?;
        let line = raw.position().map_or(0, |p| line_at(text, p.byte()));
        let row: Row = raw.deserialize(Some(&header)).map_err(|e| Error::ParseError {
            line,
            message: e.to_string(),
        })?;
        let params =
            EllipseParams::new(row.cx, row.cy, row.semi_major, row.semi_minor, row.theta_rad).map_err(|e| {
                Error::ParseError {
                    line,
                    message: e.to_string(),
                }
            })?;
        if (params.w, params.h, params.theta) != (row.semi_major, row.semi_minor, row.theta_rad) {
            let message = format!(
                "slice {}: non-canonical ellipse rewritten as semi_major={}, semi_minor={}, theta_rad={}",
                row.slice, params.w, params.h, params.theta
            );
            log::warn!("line {line}: {message}");
            warnings.push(CsvWarning { line, message });
        }
        records.push(EllipseRecord {
            slice_index: row.slice,
            params,
        });
    }
    sort_records(&mut records).map_err(|e| Error::ParseError {
        line: 0,
        message: e.to_string(),
    })?;
    Ok((records, warnings))
}

pub fn read_ellipse_csv(path: &Path) -> Result<(Vec<EllipseRecord>, Vec<CsvWarning>)> {
    parse_ellipse_csv(&read_bytes(path)?)
}

/// Renders records with shortest round-trip float formatting.
pub fn render_ellipse_csv(records: &[EllipseRecord]) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for r in records {
        let p = &r.params;
        writeln!(out, "{},{},{},{},{},{}", r.slice_index, p.cx, p.cy, p.w, p.h, p.theta).unwrap();
    }
    out
}

pub fn write_ellipse_csv(records: &[EllipseRecord], path: &Path) -> Result<()> {
    write_atomic(path, render_ellipse_csv(records).as_bytes())
}
