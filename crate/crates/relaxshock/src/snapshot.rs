//! Columnar snapshot files, one per output time.
//!
//! Layout:
//!
//! 1. a UTF-8 line with the space-separated column names of
//!    [`SNAPSHOT_COLUMNS`] (three cell-center coordinates, then the eleven
//!    state components),
//! 2. a UTF-8 line of `key=value` pairs starting with `t`, `X`, and `Xdot`
//!    (17 significant digits); writers may append further numeric metadata
//!    such as model parameters, which readers pass through,
//! 3. the payload: little-endian 64-bit floats, column-major, cells ordered
//!    `xi1` fastest within each column.
//!
//! The grid is reconstructed from the coordinate columns on read: `n1` is
//! the period of the `xi1` column, `n2` the period of `xi2` in units of
//! `n1`, and the half-length follows from the first two `xi1` values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{RelaxError, Result};
use crate::fields::{FieldState, Grid, NCOMP, SNAPSHOT_COLUMNS};

/// Shift data and free-form numeric metadata stored on the second header
/// line next to the snapshot time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SnapshotMeta {
    /// Shock location `X` at the snapshot time.
    pub x: f64,
    /// Shift rate `dX/dt` at the snapshot time.
    pub xdot: f64,
    /// Additional `key=value` pairs in write order.
    pub extra: Vec<(String, f64)>,
}

/// Decimal rendering with 17 significant digits, enough to reproduce any
/// finite `f64` bit pattern on parse.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write one snapshot file.
pub fn write_snapshot(path: &Path, fields: &FieldState, meta: &SnapshotMeta) -> Result<()> {
    let grid = &fields.grid;
    let ncells = grid.ncells();
    let mut w = BufWriter::new(File::create(path)?);

    writeln!(w, "{}", SNAPSHOT_COLUMNS.join(" "))?;
    let mut line = format!(
        "t={} X={} Xdot={}",
        fmt_f64(fields.t),
        fmt_f64(meta.x),
        fmt_f64(meta.xdot)
    );
    for (key, value) in &meta.extra {
        line.push_str(&format!(" {key}={}", fmt_f64(*value)));
    }
    writeln!(w, "{line}")?;

    let xi1_row: Vec<u8> = (0..grid.n1).flat_map(|i| grid.xi1(i).to_le_bytes()).collect();
    for _ in 0..grid.n2 * grid.n3 {
        w.write_all(&xi1_row)?;
    }
    for _ in 0..grid.n3 {
        for j in 0..grid.n2 {
            let xi2 = grid.xi2(j).to_le_bytes();
            for _ in 0..grid.n1 {
                w.write_all(&xi2)?;
            }
        }
    }
    for k in 0..grid.n3 {
        let xi3 = grid.xi3(k).to_le_bytes();
        for _ in 0..grid.n1 * grid.n2 {
            w.write_all(&xi3)?;
        }
    }
    for c in 0..NCOMP {
        for cell in 0..ncells {
            w.write_all(&fields.data[c * ncells + cell].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_meta_line(line: &str) -> Result<(f64, SnapshotMeta)> {
    let mut t = None;
    let mut meta = SnapshotMeta::default();
    for token in line.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| RelaxError::Validation(format!("bad metadata token `{token}`")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| RelaxError::Validation(format!("bad metadata value in `{token}`")))?;
        match key {
            "t" => t = Some(value),
            "X" => meta.x = value,
            "Xdot" => meta.xdot = value,
            _ => meta.extra.push((key.to_string(), value)),
        }
    }
    let t = t.ok_or_else(|| RelaxError::Validation("metadata line lacks `t=`".into()))?;
    Ok((t, meta))
}

/// Period of the leading value in a column, in strides of `stride` cells.
fn leading_period(payload: &[u8], col: usize, ncells: usize, stride: usize) -> usize {
    let first = column_value(payload, col, ncells, 0);
    let mut n = 1;
    while n * stride < ncells {
        if column_value(payload, col, ncells, n * stride).to_bits() == first.to_bits() {
            return n;
        }
        n += 1;
    }
    n
}

#[inline]
fn column_value(payload: &[u8], col: usize, ncells: usize, cell: usize) -> f64 {
    let o = (col * ncells + cell) * 8;
    f64::from_le_bytes(payload[o..o + 8].try_into().unwrap())
}

/// Read a snapshot back; the grid is rebuilt from the coordinate columns.
pub fn read_snapshot(path: &Path) -> Result<(FieldState, SnapshotMeta)> {
    let bytes = std::fs::read(path)?;
    let head_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| RelaxError::Validation("snapshot lacks a header line".into()))?;
    let meta_end = bytes[head_end + 1..]
        .iter()
        .position(|&b| b == b'\n')
        .map(|p| head_end + 1 + p)
        .ok_or_else(|| RelaxError::Validation("snapshot lacks a metadata line".into()))?;

    let header = std::str::from_utf8(&bytes[..head_end])
        .map_err(|_| RelaxError::Validation("snapshot header is not UTF-8".into()))?;
    let names: Vec<&str> = header.split_whitespace().collect();
    if names != SNAPSHOT_COLUMNS {
        return Err(RelaxError::Validation(format!(
            "unexpected snapshot columns `{header}`"
        )));
    }
    let meta_line = std::str::from_utf8(&bytes[head_end + 1..meta_end])
        .map_err(|_| RelaxError::Validation("snapshot metadata is not UTF-8".into()))?;
    let (t, meta) = parse_meta_line(meta_line)?;

    let payload = &bytes[meta_end + 1..];
    let ncols = SNAPSHOT_COLUMNS.len();
    if payload.is_empty() || payload.len() % (8 * ncols) != 0 {
        return Err(RelaxError::Validation(format!(
            "snapshot payload of {} bytes is not {} equal float columns",
            payload.len(),
            ncols
        )));
    }
    let ncells = payload.len() / (8 * ncols);

    let n1 = leading_period(payload, 0, ncells, 1);
    if ncells % n1 != 0 {
        return Err(RelaxError::Validation(format!(
            "xi1 period {n1} does not divide the cell count {ncells}"
        )));
    }
    let n2 = leading_period(payload, 1, ncells, n1);
    if (ncells / n1) % n2 != 0 {
        return Err(RelaxError::Validation(format!(
            "xi2 period {n2} does not divide the {} rows",
            ncells / n1
        )));
    }
    let n3 = ncells / (n1 * n2);
    if n1 < 2 {
        return Err(RelaxError::Validation("snapshot grid has fewer than 2 cells in xi1".into()));
    }
    let xi_first = column_value(payload, 0, ncells, 0);
    let dx1 = column_value(payload, 0, ncells, 1) - xi_first;
    let l = 0.5 * dx1 - xi_first;
    let grid = Grid::new(l, n1, n2, n3)?;

    let mut data = vec![0.0; NCOMP * ncells];
    for c in 0..NCOMP {
        for cell in 0..ncells {
            data[c * ncells + cell] = column_value(payload, 3 + c, ncells, cell);
        }
    }
    Ok((FieldState { grid, t, data }, meta))
}
