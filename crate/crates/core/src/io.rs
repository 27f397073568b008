//! Text formats shared by the command-line tool and the C bindings.
//!
//! * matrices: comma-separated, one row per line, no header, shortest
//!   round-trip decimal representation of each `f64`;
//! * edge lists: tab-separated `i\tj\tvalue`, 0-based, upper triangle only.
//!
//! Files are written to a temporary sibling first and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::Matrix;

pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 20);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            // shortest round-trip form, switching to exponent notation at extreme magnitudes
            write!(out, "{:?}", m[(i, j)]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|e| {
                    Error::Parse(format!("line {}: cannot parse '{}': {e}", lineno + 1, cell.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected {} columns, found {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("matrix file is empty".into()));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(Matrix::from_row_iterator(r, c, rows.into_iter().flatten()))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path)?;
    parse_matrix(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_atomic(path, format_matrix(m).as_bytes())
}

/// Upper-triangle entries with magnitude above `tol`.
pub fn format_edges(m: &Matrix, tol: f64) -> String {
    let mut out = String::new();
    let p = m.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            let v = m[(i, j)];
            if v.abs() > tol {
                writeln!(out, "{i}\t{j}\t{v:?}").unwrap();
            }
        }
    }
    out
}

pub fn parse_edges(text: &str) -> Result<Vec<(usize, usize, f64)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(n, line)| {
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = || Error::Parse(format!("edge line {}: '{line}'", n + 1));
            if cols.len() != 3 {
                return Err(bad());
            }
            Ok((
                cols[0].trim().parse().map_err(|_| bad())?,
                cols[1].trim().parse().map_err(|_| bad())?,
                cols[2].trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

pub fn write_edges(path: &Path, m: &Matrix, tol: f64) -> Result<()> {
    write_atomic(path, format_edges(m, tol).as_bytes())
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}
