//! D8 single-flow-direction routing and flow accumulation.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};
use crate::par::map_cells;
use crate::raster::{ClassGrid, FloatGrid, DEFAULT_CLASS_NODATA};

/// Categorical grid of D8 codes; see [`FlowDir`].
pub type FlowDirGrid = ClassGrid;

/// D8 direction codes, in ascending code order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[repr(i32)]
pub enum FlowDir {
    E = 1,
    SE = 2,
    S = 4,
    SW = 8,
    W = 16,
    NW = 32,
    N = 64,
    NE = 128,
}

/// `(code, d_row, d_col)` for every direction, lowest code first.
pub const D8_CODES: [(i32, isize, isize); 8] = [
    (1, 0, 1),
    (2, 1, 1),
    (4, 1, 0),
    (8, 1, -1),
    (16, 0, -1),
    (32, -1, -1),
    (64, -1, 0),
    (128, -1, 1),
];

/// Code for a cell with nowhere to drain.
pub const NO_OUTFLOW: i32 = 0;

#[inline]
fn offset(rows: usize, cols: usize, r: usize, c: usize, dr: isize, dc: isize) -> Option<usize> {
    let rr = r as isize + dr;
    let cc = c as isize + dc;
    (rr >= 0 && cc >= 0 && (rr as usize) < rows && (cc as usize) < cols)
        .then(|| rr as usize * cols + cc as usize)
}

#[derive(PartialEq)]
struct Elev(f64);

impl Eq for Elev {}

impl PartialOrd for Elev {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Elev {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Priority-flood depression filling that leaves every non-outlet cell with
/// at least one strictly lower neighbour (each raised cell sits one ulp
/// above the cell it was reached from).
///
/// Outlets are valid cells on the grid border or next to a nodata cell.
pub fn fill_depressions(dem: &FloatGrid) -> FloatGrid {
    let rows = dem.n_rows();
    let cols = dem.n_cols();
    let mut z: Vec<f64> = dem.values().to_vec();
    let valid: Vec<bool> = (0..z.len()).map(|i| !dem.is_nodata_at(i)).collect();
    let mut done = vec![false; z.len()];
    let mut heap = BinaryHeap::new();

    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if valid[i] && is_edge(&valid, rows, cols, r, c) {
                done[i] = true;
                heap.push(Reverse((Elev(z[i]), i)));
            }
        }
    }

    while let Some(Reverse((Elev(zc), i))) = heap.pop() {
        let (r, c) = (i / cols, i % cols);
        for &(_, dr, dc) in &D8_CODES {
            let Some(n) = offset(rows, cols, r, c, dr, dc) else {
                continue;
            };
            if !valid[n] || done[n] {
                continue;
            }
            done[n] = true;
            if z[n] <= zc {
                z[n] = zc.next_up();
            }
            heap.push(Reverse((Elev(z[n]), n)));
        }
    }
    dem.with_values(z, dem.nodata())
}

fn is_edge(valid: &[bool], rows: usize, cols: usize, r: usize, c: usize) -> bool {
    D8_CODES
        .iter()
        .any(|&(_, dr, dc)| offset(rows, cols, r, c, dr, dc).is_none_or(|n| !valid[n]))
}

/// D8 flow directions on the depression-filled DEM.
///
/// Each cell drains to its steepest strictly lower neighbour (drop over
/// centre distance, diagonals at √2·cell_size); ties go to the lowest code.
/// Outlet cells with no lower neighbour drain off-grid (or into nodata)
/// along the lowest such code.
pub fn flow_direction_d8(dem: &FloatGrid) -> Result<FlowDirGrid> {
    let filled = fill_depressions(dem);
    let rows = dem.n_rows();
    let cols = dem.n_cols();
    let cs = dem.cell_size();
    let diag = cs * std::f64::consts::SQRT_2;
    let z = filled.values();
    let valid = |i: usize| !filled.is_nodata_at(i);

    let codes = map_cells(rows, cols, |r, c| {
        let i = r * cols + c;
        if !valid(i) {
            return DEFAULT_CLASS_NODATA;
        }
        let mut best = NO_OUTFLOW;
        let mut best_slope = 0.0;
        let mut exit = NO_OUTFLOW;
        for &(code, dr, dc) in &D8_CODES {
            match offset(rows, cols, r, c, dr, dc) {
                Some(n) if valid(n) => {
                    if z[n] < z[i] {
                        let dist = if dr != 0 && dc != 0 { diag } else { cs };
                        let s = (z[i] - z[n]) / dist;
                        if s > best_slope {
                            best_slope = s;
                            best = code;
                        }
                    }
                }
                _ => {
                    if exit == NO_OUTFLOW {
                        exit = code;
                    }
                }
            }
        }
        if best != NO_OUTFLOW {
            best
        } else {
            exit
        }
    });
    Ok(filled.with_values(codes, DEFAULT_CLASS_NODATA))
}

/// Receiver of cell `i`, or `None` for outlets.
fn receiver(fdir: &FlowDirGrid, i: usize) -> Result<Option<usize>> {
    let code = fdir.values()[i];
    if code == NO_OUTFLOW {
        return Ok(None);
    }
    let &(_, dr, dc) = D8_CODES
        .iter()
        .find(|(k, _, _)| *k == code)
        .ok_or_else(|| Error::InvalidGrid(format!("invalid D8 code {code} at cell {i}")))?;
    let cols = fdir.n_cols();
    Ok(offset(fdir.n_rows(), cols, i / cols, i % cols, dr, dc).filter(|&n| !fdir.is_nodata_at(n)))
}

/// Number of upstream cells draining through each cell, the cell itself
/// excluded. Nodata cells stay nodata and contribute nothing.
pub fn flow_accumulation(fdir: &FlowDirGrid) -> Result<FloatGrid> {
    let n = fdir.len();
    let mut recv = vec![None; n];
    let mut indeg = vec![0u32; n];
    let mut routed = 0usize;
    for i in 0..n {
        if fdir.is_nodata_at(i) {
            continue;
        }
        routed += 1;
        recv[i] = receiver(fdir, i)?;
        if let Some(j) = recv[i] {
            indeg[j] += 1;
        }
    }

    let mut acc = vec![0.0f64; n];
    let mut queue: VecDeque<usize> = (0..n)
        .filter(|&i| !fdir.is_nodata_at(i) && indeg[i] == 0)
        .collect();
    let mut processed = 0usize;
    while let Some(i) = queue.pop_front() {
        processed += 1;
        if let Some(j) = recv[i] {
            acc[j] += acc[i] + 1.0;
            indeg[j] -= 1;
            if indeg[j] == 0 {
                queue.push_back(j);
            }
        }
    }
    if processed != routed {
        return Err(Error::FlowCycle(routed - processed));
    }

    let nodata = crate::raster::DEFAULT_NODATA;
    for (i, a) in acc.iter_mut().enumerate() {
        if fdir.is_nodata_at(i) {
            *a = nodata;
        }
    }
    Ok(fdir.with_values(acc, nodata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{GeoRef, Grid, DEFAULT_NODATA};
    use proptest::prelude::*;

    fn dem(rows: usize, cols: usize, v: Vec<f64>) -> FloatGrid {
        Grid::new(GeoRef::new(0.0, 0.0, 1.0, rows, cols).unwrap(), v, DEFAULT_NODATA).unwrap()
    }

    /// Reverse breadth-first enumeration of each cell's upstream set.
    fn upstream_counts(fdir: &FlowDirGrid) -> Vec<f64> {
        let n = fdir.len();
        let mut preds = vec![vec![]; n];
        for i in 0..n {
            if fdir.is_nodata_at(i) {
                continue;
            }
            if let Some(j) = receiver(fdir, i).unwrap() {
                preds[j].push(i);
            }
        }
        (0..n)
            .map(|t| {
                if fdir.is_nodata_at(t) {
                    return DEFAULT_NODATA;
                }
                let mut seen = vec![false; n];
                let mut stack = preds[t].clone();
                let mut count = 0;
                while let Some(u) = stack.pop() {
                    if std::mem::replace(&mut seen[u], true) {
                        continue;
                    }
                    count += 1;
                    stack.extend(preds[u].iter().copied());
                }
                count as f64
            })
            .collect()
    }

    #[test]
    fn monotone_strip() {
        let d = dem(1, 3, vec![3.0, 2.0, 1.0]);
        let f = flow_direction_d8(&d).unwrap();
        assert_eq!(f.values(), &[1, 1, 1]);
        let a = flow_accumulation(&f).unwrap();
        assert_eq!(a.values(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn pit_drains_to_lowest_spill() {
        let d = dem(
            3,
            3,
            vec![
                9.0, 8.0, 9.0, //
                7.0, 1.0, 5.0, //
                9.0, 6.0, 9.0,
            ],
        );
        let f = flow_direction_d8(&d).unwrap();
        assert_eq!(f.get(1, 1), FlowDir::E as i32);
        // the two east corners drain straight to the spill cell, the rest via the pit
        let a = flow_accumulation(&f).unwrap();
        assert_eq!(a.get(1, 1), 5.0);
        assert_eq!(a.get(1, 2), 8.0);
        assert_eq!(f.get(1, 2), FlowDir::E as i32);
    }

    #[test]
    fn tie_prefers_lowest_code() {
        // centre has equal drops east and south
        let d = dem(
            3,
            3,
            vec![
                9.0, 9.0, 9.0, //
                9.0, 5.0, 4.0, //
                9.0, 4.0, 9.0,
            ],
        );
        let f = flow_direction_d8(&d).unwrap();
        assert_eq!(f.get(1, 1), FlowDir::E as i32);
    }

    #[test]
    fn flat_grid_is_fully_routed() {
        let d = dem(5, 5, vec![10.0; 25]);
        let f = flow_direction_d8(&d).unwrap();
        let a = flow_accumulation(&f).unwrap();
        assert_eq!(a.values(), upstream_counts(&f).as_slice());
        assert!(f.get(2, 2) != NO_OUTFLOW);
    }

    #[test]
    fn single_outlet_cone() {
        let n = 12;
        let d = Grid::from_fn(GeoRef::new(0.0, 0.0, 30.0, n, n).unwrap(), DEFAULT_NODATA, |r, c| {
            ((r * r + c * c) as f64).sqrt()
        })
        .unwrap();
        let a = flow_accumulation(&flow_direction_d8(&d).unwrap()).unwrap();
        assert_eq!(a.get(0, 0), (n * n - 1) as f64);
    }

    #[test]
    fn isolated_nodata_is_excluded() {
        let mut d = dem(3, 3, vec![9.0, 8.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0]);
        d.set(1, 1, DEFAULT_NODATA);
        let f = flow_direction_d8(&d).unwrap();
        assert!(f.is_nodata(f.get(1, 1)));
        let a = flow_accumulation(&f).unwrap();
        assert!(a.is_nodata(a.get(1, 1)));
        let total: f64 = a.valid_values().sum();
        assert_eq!(a.values(), upstream_counts(&f).as_slice());
        assert!(total < 8.0 * 7.0);
    }

    #[test]
    fn cycle_detected() {
        let g = GeoRef::new(0.0, 0.0, 1.0, 1, 2).unwrap();
        let f = Grid::new(g, vec![1, 16], DEFAULT_CLASS_NODATA).unwrap();
        assert!(matches!(flow_accumulation(&f), Err(Error::FlowCycle(2))));
        let bad = Grid::new(g, vec![3, 16], DEFAULT_CLASS_NODATA).unwrap();
        assert!(flow_accumulation(&bad).is_err());
    }

    proptest! {
        #[test]
        fn matches_upstream_enumeration(
            rows in 1usize..=10,
            cols in 1usize..=10,
            raw in prop::collection::vec(0u8..6, 100),
            holes in prop::collection::vec(0u8..20, 100),
        ) {
            let v: Vec<f64> = (0..rows * cols)
                .map(|i| if holes[i] == 0 { DEFAULT_NODATA } else { raw[i] as f64 })
                .collect();
            let d = dem(rows, cols, v);
            let f = flow_direction_d8(&d).unwrap();
            let a = flow_accumulation(&f).unwrap();
            let want = upstream_counts(&f);
            prop_assert_eq!(a.values(), want.as_slice());
        }
    }
}
