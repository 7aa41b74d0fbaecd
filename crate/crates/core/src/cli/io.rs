//! File formats used by the command-line tool.

use std::fs;
use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

use super::CliError;
use crate::noise::CovarianceMatrix;

/// Full-precision rendering (17 significant digits).
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses three whitespace-separated rows of three reals; `#` starts a
/// comment and blank lines are ignored.
pub fn parse_covariance(text: &str) -> Result<CovarianceMatrix, CliError> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let row = content
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    CliError::Usage(format!(
                        "covariance line {}: cannot parse '{tok}' as a number",
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if row.len() != 3 {
            return Err(CliError::Usage(format!(
                "covariance line {}: expected 3 entries, found {}",
                lineno + 1,
                row.len()
            )));
        }
        rows.push([row[0], row[1], row[2]]);
    }
    if rows.len() != 3 {
        return Err(CliError::Usage(format!(
            "covariance file must have 3 rows, found {}",
            rows.len()
        )));
    }
    Ok(CovarianceMatrix::from_rows([rows[0], rows[1], rows[2]])?)
}

pub fn read_covariance_file(path: &Path) -> Result<CovarianceMatrix, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_covariance(&text).map_err(|e| match e {
        CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Writes `bytes` to a temporary file beside `path` and renames it into
/// place, so `path` is either absent or complete.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<f64>]) -> Result<Vec<u8>, CliError> {
    let err = |e: csv::Error| CliError::Io(format!("csv encoding failed: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| format_float(x)))
            .map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Io(format!("csv encoding failed: {e}")))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

/// Reads the time column (first) and a value column from a headed CSV file.
/// Without `column` the second column is used.
pub fn read_series(path: &Path, column: Option<&str>) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        .clone();
    let index = match column {
        Some(name) => headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Usage(format!("{}: no column named '{name}'", path.display()))
        })?,
        None if headers.len() >= 2 => 1,
        None => {
            return Err(CliError::Usage(format!(
                "{}: need a time column and a value column",
                path.display()
            )))
        }
    };
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let field = |j: usize| -> Result<f64, CliError> {
            record
                .get(j)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "{}: row {} column {} is not a number",
                        path.display(),
                        i + 2,
                        j + 1
                    ))
                })
        };
        times.push(field(0)?);
        values.push(field(index)?);
    }
    Ok((times, values))
}
