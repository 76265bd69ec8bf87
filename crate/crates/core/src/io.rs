//! Curve files: comma-separated, one curve per row, one column per grid
//! point. With a grid header the first row holds the abscissae; otherwise the
//! grid is equi-spaced on `[0, 1]`.

use std::path::Path;
use std::sync::Arc;

use crate::directions::fmt17;
use crate::error::{Error, Result};
use crate::functional::{FunctionalSample, Grid};

pub fn read_curve_file(path: &Path, grid_header: bool) -> Result<FunctionalSample> {
    let text = std::fs::read_to_string(path)?;
    parse_curves(&text, path, grid_header)
}

pub fn parse_curves(text: &str, path: &Path, grid_header: bool) -> Result<FunctionalSample> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let mut header: Option<Vec<f64>> = None;
    let mut width: Option<usize> = None;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|cell| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, format!("`{cell}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            Some(w) if w != row.len() => {
                return Err(parse_err(line, format!("expected {w} columns, found {}", row.len())));
            }
            _ => width = Some(row.len()),
        }
        if grid_header && header.is_none() {
            header = Some(row);
        } else {
            values.extend(row);
        }
    }
    let width = width.ok_or_else(|| parse_err(0, "file contains no curves".into()))?;
    if values.is_empty() {
        return Err(parse_err(0, "file contains no curves".into()));
    }
    let grid = match header {
        Some(points) => Grid::new(points),
        None => Grid::uniform(width),
    }
    .map_err(|e| parse_err(1, e.to_string()))?;
    FunctionalSample::from_rows(Arc::new(grid), values).map_err(|e| parse_err(0, e.to_string()))
}

/// Serializes a sample in the same layout, optionally with the grid header.
pub fn format_curves(sample: &FunctionalSample, grid_header: bool) -> String {
    let mut out = String::new();
    let mut push_row = |row: &[f64]| {
        let cells: Vec<String> = row.iter().copied().map(fmt17).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    };
    if grid_header {
        push_row(sample.grid().points());
    }
    for row in sample.rows() {
        push_row(row);
    }
    out
}
