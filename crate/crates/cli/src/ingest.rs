//! CSV ingestion.

use std::path::Path;

use nalgebra::DMatrix;
use robit_core::Dataset;

use crate::error::{CliError, CliResult};

pub const INTERCEPT_NAME: &str = "intercept";

/// A dataset together with the names of its design columns, in order.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub columns: Vec<String>,
}

/// Reads a headered CSV. Every column other than `response_column` is a
/// predictor, kept in file order; `max_columns` keeps only the first `K` of
/// them. An intercept column of ones is prepended when requested.
pub fn ingest_csv(
    path: &Path,
    intercept: bool,
    response_column: &str,
    max_columns: Option<usize>,
) -> CliResult<LoadedData> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let response_idx = headers.iter().position(|h| h == response_column).ok_or_else(|| {
        CliError::config("response", format!("column `{response_column}` not found in {}", path.display()))
    })?;
    let mut predictor_idx: Vec<usize> = (0..headers.len()).filter(|&i| i != response_idx).collect();
    if let Some(k) = max_columns {
        if k == 0 || k > predictor_idx.len() {
            return Err(CliError::config(
                "columns",
                format!("requested {k} predictor columns, file has {}", predictor_idx.len()),
            ));
        }
        predictor_idx.truncate(k);
    }

    let mut columns = Vec::with_capacity(predictor_idx.len() + 1);
    if intercept {
        columns.push(INTERCEPT_NAME.to_string());
    }
    columns.extend(predictor_idx.iter().map(|&i| headers[i].to_string()));

    let mut rows: Vec<f64> = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let raw = &record[response_idx];
        let value = parse_cell(path, line, &headers[response_idx], raw)?;
        y.push(match value {
            v if v == 0.0 => 0,
            v if v == 1.0 => 1,
            _ => {
                return Err(CliError::NonBinaryResponse {
                    path: path.to_path_buf(),
                    line,
                    column: headers[response_idx].to_string(),
                    value: raw.to_string(),
                })
            }
        });
        if intercept {
            rows.push(1.0);
        }
        for &i in &predictor_idx {
            rows.push(parse_cell(path, line, &headers[i], &record[i])?);
        }
    }
    let n = y.len();
    if n == 0 {
        return Err(CliError::Parse { path: path.to_path_buf(), line: 1, message: "no data rows".into() });
    }
    let x = DMatrix::from_row_slice(n, columns.len(), &rows);
    Ok(LoadedData { dataset: Dataset::new(x, y)?, columns })
}

fn parse_cell(path: &Path, line: u64, column: &str, raw: &str) -> CliResult<f64> {
    let missing = || CliError::MissingValue { path: path.to_path_buf(), line, column: column.to_string() };
    if raw.is_empty() || raw.eq_ignore_ascii_case("na") {
        return Err(missing());
    }
    let v: f64 = raw.parse().map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("cannot parse `{raw}` in column `{column}` as a number"),
    })?;
    if v.is_nan() {
        return Err(missing());
    }
    if v.is_infinite() {
        return Err(CliError::Parse { path: path.to_path_buf(), line, message: format!("infinite value in column `{column}`") });
    }
    Ok(v)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::Parse { path: path.to_path_buf(), line, message: format!("{other:?}") },
    }
}

/// Whitespace- or comma-separated numbers, one matrix row per line.
pub fn read_numeric_rows(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|_| CliError::Parse {
                    path: path.to_path_buf(),
                    line: i as u64 + 1,
                    message: format!("cannot parse `{t}` as a number"),
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}
