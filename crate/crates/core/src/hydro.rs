//! Stream extraction, exact Euclidean distance and drainage density.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::par::map_cells;
use crate::raster::{FloatGrid, MaskGrid, DEFAULT_CLASS_NODATA, DEFAULT_NODATA};

/// Cells whose flow accumulation reaches `threshold` become stream cells.
pub fn extract_streams(acc: &FloatGrid, threshold: f64) -> Result<MaskGrid> {
    if !(threshold > 0.0) {
        return Err(Error::invalid(format!(
            "stream threshold must be > 0, got {threshold}"
        )));
    }
    let values = acc
        .values()
        .iter()
        .map(|&a| {
            if acc.is_nodata(a) {
                DEFAULT_CLASS_NODATA
            } else {
                (a >= threshold) as i32
            }
        })
        .collect();
    Ok(acc.with_values(values, DEFAULT_CLASS_NODATA))
}

/// Exact Euclidean distance (map units) from each cell centre to the nearest
/// source-cell centre.
///
/// Two-pass separable transform (Meijster et al.) in integer arithmetic:
/// a per-column 1-D scan, then a per-row lower envelope of parabolas.
/// Nodata mask cells are not sources and come out as nodata.
pub fn euclidean_distance(sources: &MaskGrid) -> Result<FloatGrid> {
    let rows = sources.n_rows();
    let cols = sources.n_cols();
    let is_source = |i: usize| sources.value_at(i) == Some(1);
    if !(0..sources.len()).any(is_source) {
        return Err(Error::invalid("euclidean distance needs at least one source cell"));
    }
    let inf = (rows + cols) as i64;

    // Column pass, stored column-major.
    let mut g = vec![0i64; rows * cols];
    g.par_chunks_mut(rows).enumerate().for_each(|(c, col)| {
        let mut prev = inf;
        for r in 0..rows {
            prev = if is_source(r * cols + c) { 0 } else { (prev + 1).min(inf) };
            col[r] = prev;
        }
        for r in (0..rows.saturating_sub(1)).rev() {
            if col[r + 1] < col[r] {
                col[r] = col[r + 1] + 1;
            }
        }
    });

    let cs = sources.cell_size();
    let mut out = vec![0.0f64; rows * cols];
    out.par_chunks_mut(cols).enumerate().for_each_init(
        || (vec![0usize; cols], vec![0i64; cols], vec![0i64; cols]),
        |(s, t, gr), (r, row)| {
            for c in 0..cols {
                gr[c] = g[c * rows + r];
            }
            let f = |x: i64, i: usize| -> i64 { (x - i as i64).pow(2) + gr[i] * gr[i] };
            let sep = |i: usize, u: usize| -> i64 {
                let (ii, uu) = (i as i64, u as i64);
                (uu * uu - ii * ii + gr[u] * gr[u] - gr[i] * gr[i]).div_euclid(2 * (uu - ii))
            };
            let mut q: isize = 0;
            s[0] = 0;
            t[0] = 0;
            for u in 1..cols {
                while q >= 0 && f(t[q as usize], s[q as usize]) > f(t[q as usize], u) {
                    q -= 1;
                }
                if q < 0 {
                    q = 0;
                    s[0] = u;
                } else {
                    let w = 1 + sep(s[q as usize], u);
                    if w < cols as i64 {
                        q += 1;
                        s[q as usize] = u;
                        t[q as usize] = w;
                    }
                }
            }
            for u in (0..cols).rev() {
                let d2 = f(u as i64, s[q as usize]);
                row[u] = (d2 as f64).sqrt() * cs;
                if u as i64 == t[q as usize] {
                    q -= 1;
                }
            }
        },
    );
    for (i, v) in out.iter_mut().enumerate() {
        if sources.is_nodata_at(i) {
            *v = DEFAULT_NODATA;
        }
    }
    Ok(sources.with_values(out, DEFAULT_NODATA))
}

/// Stream length per unit area in a square window of half-width `radius`.
///
/// Each stream cell contributes `cell_size` of length; the window area counts
/// only in-grid, non-nodata cells. Output is in map-length per map-area
/// (metres per square metre for metric grids; multiply by 1000 for km/km²).
pub fn drainage_density(streams: &MaskGrid, radius: f64) -> Result<FloatGrid> {
    let cs = streams.cell_size();
    if !(radius >= cs) {
        return Err(Error::invalid(format!(
            "density radius {radius} must be >= cell size {cs}"
        )));
    }
    let rows = streams.n_rows();
    let cols = streams.n_cols();
    let half = (radius / cs + 1e-9).floor() as usize;

    // Summed-area tables with a zero border row/column.
    let w = cols + 1;
    let mut len_sat = vec![0i64; (rows + 1) * w];
    let mut area_sat = vec![0i64; (rows + 1) * w];
    for r in 0..rows {
        let (mut len_row, mut area_row) = (0i64, 0i64);
        for c in 0..cols {
            if let Some(v) = streams.value_at(r * cols + c) {
                area_row += 1;
                len_row += (v == 1) as i64;
            }
            len_sat[(r + 1) * w + c + 1] = len_sat[r * w + c + 1] + len_row;
            area_sat[(r + 1) * w + c + 1] = area_sat[r * w + c + 1] + area_row;
        }
    }
    let window = |sat: &[i64], r0: usize, c0: usize, r1: usize, c1: usize| -> i64 {
        sat[r1 * w + c1] - sat[r0 * w + c1] - sat[r1 * w + c0] + sat[r0 * w + c0]
    };

    let values = map_cells(rows, cols, |r, c| {
        if streams.is_nodata_at(r * cols + c) {
            return DEFAULT_NODATA;
        }
        let (r0, r1) = (r.saturating_sub(half), (r + half + 1).min(rows));
        let (c0, c1) = (c.saturating_sub(half), (c + half + 1).min(cols));
        let n_stream = window(&len_sat, r0, c0, r1, c1);
        let n_cells = window(&area_sat, r0, c0, r1, c1);
        (n_stream as f64 * cs) / (n_cells as f64 * cs * cs)
    });
    Ok(streams.with_values(values, DEFAULT_NODATA))
}
