//! File formats: CSV for curves, labels, and scalar covariates; JSON for
//! models and reports. All writers go through [`atomic_write`] so partially
//! written files are never observed.
//!
//! Curve CSV layout: the first row holds the observation grid, every later
//! row holds one curve sampled on that grid. Grids recorded on an arbitrary
//! time axis are affinely rescaled onto `[0, 1]` when read.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::curves::{Grid, SampledCurve};
use crate::error::{Error, Result};

/// Writes through a temp file in the destination directory, then renames.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    std::io::Write::write_all(&mut tmp.as_file(), bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|_| {
                Error::InvalidData(format!("line {lineno}: invalid number {tok:?}"))
            })
        })
        .collect()
}

/// Reads a curve CSV. Grids outside `[0, 1]` are affinely mapped onto it.
pub fn read_curves(path: &Path) -> Result<Vec<SampledCurve>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (n0, header) = lines
        .next()
        .ok_or_else(|| Error::InvalidData("empty curve file".into()))?;
    let mut points = parse_row(header, n0 + 1)?;
    let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo < 0.0 || hi > 1.0 {
        if hi <= lo {
            return Err(Error::InvalidGrid(format!(
                "cannot rescale degenerate grid [{lo}, {hi}]"
            )));
        }
        for t in points.iter_mut() {
            *t = (*t - lo) / (hi - lo);
        }
    }
    let grid = Arc::new(Grid::new(points)?);
    let m = grid.len();
    let mut curves = Vec::new();
    for (i, line) in lines {
        let row = parse_row(line, i + 1)?;
        if row.len() != m {
            return Err(Error::InvalidData(format!(
                "line {}: expected {} values, got {}",
                i + 1,
                m,
                row.len()
            )));
        }
        curves.push(SampledCurve::new(Arc::clone(&grid), row)?);
    }
    if curves.is_empty() {
        return Err(Error::InvalidData("curve file holds no curves".into()));
    }
    Ok(curves)
}

pub fn write_curves(path: &Path, grid: &Grid, curves: &[SampledCurve]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&join_row(grid.points()));
    out.push('\n');
    for c in curves {
        out.push_str(&join_row(c.values()));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Reads class labels, one `+1`/`-1` per line.
pub fn read_labels(path: &Path) -> Result<Vec<i8>> {
    let text = std::fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        match tok {
            "1" | "+1" => labels.push(1),
            "-1" => labels.push(-1),
            other => {
                return Err(Error::InvalidData(format!(
                    "line {}: label must be +1 or -1, got {other:?}",
                    i + 1
                )))
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::InvalidData("label file holds no labels".into()));
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[i8]) -> Result<()> {
    let mut out = String::new();
    for &l in labels {
        out.push_str(if l >= 0 { "1\n" } else { "-1\n" });
    }
    atomic_write(path, out.as_bytes())
}

/// Reads a rectangular scalar-covariate CSV into an n×p matrix.
pub fn read_scalars(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = parse_row(line, i + 1)?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::InvalidData(format!(
                    "line {}: expected {} columns, got {}",
                    i + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidData("scalar file holds no rows".into()));
    }
    let p = rows[0].len();
    Ok(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
}

pub fn write_scalars(path: &Path, scalars: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..scalars.nrows() {
        let row: Vec<f64> = (0..scalars.ncols()).map(|j| scalars[(i, j)]).collect();
        out.push_str(&join_row(&row));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

fn join_row(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.17}"))
        .collect::<Vec<_>>()
        .join(",")
}
