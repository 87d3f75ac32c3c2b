//! Comma-delimited dataset ingestion.
//!
//! Format: UTF-8, one header row, `,` separators, `.` decimals, no quoting.
//! Rows are numbered as file lines, so the first data row is row 2.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Parses dataset text; `response` names the column used as `y`.
pub fn parse_dataset(text: &str, response: &str) -> Result<Dataset> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::InvalidData("missing header row".into()))?;
    let header: Vec<String> = header_line.split(',').map(|h| h.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for h in &header {
        if h.is_empty() {
            return Err(Error::InvalidData("empty column name in header".into()));
        }
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateHeader(h.clone()));
        }
    }
    let response_col = header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| Error::MissingColumn(response.to_string()))?;
    if header.len() < 2 {
        return Err(Error::InvalidData("no covariate columns besides the response".into()));
    }

    let width = header.len();
    let mut cells: Vec<Vec<f64>> = Vec::new();
    for (row, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(Error::Parse {
                row,
                column: "*".into(),
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        let mut values = Vec::with_capacity(width);
        for (col, field) in fields.iter().enumerate() {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column: header[col].clone(),
                message: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: header[col].clone(),
                    message: format!("'{field}' is not finite"),
                });
            }
            values.push(v);
        }
        cells.push(values);
    }
    if cells.len() < 2 {
        return Err(Error::InvalidData(format!(
            "need at least 2 data rows, found {}",
            cells.len()
        )));
    }

    let n = cells.len();
    let y = DVector::from_fn(n, |i, _| cells[i][response_col]);
    let covariates: Vec<usize> = (0..width).filter(|&c| c != response_col).collect();
    let x = DMatrix::from_fn(n, covariates.len(), |i, j| cells[i][covariates[j]]);
    let names = covariates.iter().map(|&c| header[c].clone()).collect();
    Dataset::new(y, x, names)
}

pub fn read_dataset(path: &Path, response: &str) -> Result<Dataset> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::InvalidData(format!("{} is not valid UTF-8", path.display())))?;
    parse_dataset(&text, response)
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Hex SHA-256 of the input bytes.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
