//! ESRI ASCII Grid reader and writer.
//!
//! Six header lines (`ncols`, `nrows`, `xllcorner`, `yllcorner`, `cellsize`,
//! `NODATA_value`; keys case-insensitive) followed by `nrows` lines of
//! `ncols` values, north row first. Values are written with Rust's shortest
//! round-trip float formatting, so `read(write(g)) == g` bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::grid::{CellValue, GeoRef, Grid};
use crate::error::{Error, Result};

const KEYS: [&str; 6] = [
    "ncols",
    "nrows",
    "xllcorner",
    "yllcorner",
    "cellsize",
    "nodata_value",
];

pub fn read_ascii_grid(path: impl AsRef<Path>) -> Result<Grid<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ascii_grid(&text, path)
}

pub fn parse_ascii_grid(text: &str, path: &Path) -> Result<Grid<f64>> {
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut header: [Option<f64>; 6] = [None; 6];
    let mut center_registered = [false; 2];
    let mut lines = text.lines().enumerate().peekable();
    let mut seen = 0;
    while seen < 6 {
        let Some((idx, line)) = lines.next() else {
            let missing: Vec<_> = KEYS
                .iter()
                .zip(header.iter())
                .filter(|(_, v)| v.is_none())
                .map(|(k, _)| *k)
                .collect();
            return Err(perr(idx_end(text), format!("missing header key(s): {}", missing.join(", "))));
        };
        let lineno = idx + 1;
        let mut toks = line.split_whitespace();
        let Some(key) = toks.next() else { continue };
        let key_lc = key.to_ascii_lowercase();
        let slot = match key_lc.as_str() {
            "xllcenter" => {
                center_registered[0] = true;
                2
            }
            "yllcenter" => {
                center_registered[1] = true;
                3
            }
            k => match KEYS.iter().position(|h| *h == k) {
                Some(p) => p,
                None if key_lc.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) => {
                    return Err(perr(lineno, format!("unknown header key `{key}`")));
                }
                None => {
                    let missing: Vec<_> = KEYS
                        .iter()
                        .zip(header.iter())
                        .filter(|(_, v)| v.is_none())
                        .map(|(k, _)| *k)
                        .collect();
                    return Err(perr(lineno, format!("missing header key(s): {}", missing.join(", "))));
                }
            },
        };
        if header[slot].is_some() {
            return Err(perr(lineno, format!("duplicate header key `{key}`")));
        }
        let raw = toks
            .next()
            .ok_or_else(|| perr(lineno, format!("header key `{key}` has no value")))?;
        let val: f64 = raw
            .parse()
            .map_err(|_| perr(lineno, format!("non-numeric header value `{raw}` for `{key}`")))?;
        header[slot] = Some(val);
        seen += 1;
    }

    let [ncols, nrows, mut xll, mut yll, cellsize, nodata] = header.map(|v| v.unwrap());
    let as_count = |v: f64, key: &str| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(perr(0, format!("`{key}` must be a positive integer, got {v}")))
        }
    };
    let n_cols = as_count(ncols, "ncols")?;
    let n_rows = as_count(nrows, "nrows")?;
    if center_registered[0] {
        xll -= cellsize / 2.0;
    }
    if center_registered[1] {
        yll -= cellsize / 2.0;
    }
    let georef = GeoRef::new(xll, yll, cellsize, n_rows, n_cols)?;

    let expected = n_rows * n_cols;
    let mut values = Vec::with_capacity(expected);
    let mut last_line = 0;
    for (idx, line) in lines {
        last_line = idx + 1;
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| perr(idx + 1, format!("non-numeric token `{tok}`")))?;
            values.push(v);
            if values.len() > expected {
                return Err(perr(
                    idx + 1,
                    format!("value count mismatch: more than the declared {n_rows}x{n_cols}={expected} values"),
                ));
            }
        }
    }
    if values.len() != expected {
        return Err(perr(
            last_line,
            format!(
                "value count mismatch: declared {n_rows}x{n_cols}={expected}, found {}",
                values.len()
            ),
        ));
    }
    Grid::new(georef, values, nodata)
}

fn idx_end(text: &str) -> usize {
    text.lines().count()
}

/// Serializes a grid to the canonical text form.
pub fn format_ascii_grid<T: CellValue>(grid: &Grid<T>) -> String {
    let g = grid.georef();
    let mut out = String::with_capacity(grid.len() * 8 + 128);
    let _ = writeln!(out, "ncols {}", g.n_cols);
    let _ = writeln!(out, "nrows {}", g.n_rows);
    let _ = writeln!(out, "xllcorner {}", g.x_origin);
    let _ = writeln!(out, "yllcorner {}", g.y_origin);
    let _ = writeln!(out, "cellsize {}", g.cell_size);
    let _ = writeln!(out, "NODATA_value {}", grid.nodata());
    for row in grid.values().chunks(g.n_cols) {
        for (i, &v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let v = if grid.is_nodata(v) { grid.nodata() } else { v };
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_ascii_grid<T: CellValue>(grid: &Grid<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(format_ascii_grid(grid).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
