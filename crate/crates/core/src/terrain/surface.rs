//! 3×3 surface derivatives: Horn slope/aspect, Zevenbergen-Thorne curvature.
//!
//! Window layout (row 0 is north):
//!
//! ```text
//! a b c
//! d e f
//! g h i
//! ```
//!
//! Off-grid neighbours replicate the nearest edge cell.

use crate::error::Result;
use crate::par::map_cells;
use crate::raster::FloatGrid;

/// Aspect value assigned to cells without a defined downslope direction.
pub const FLAT_ASPECT: f64 = -1.0;
const FLAT_GRADIENT: f64 = 1e-8;

/// Edge-replicated 3×3 neighbourhood, or `None` if any member is nodata.
#[inline]
fn window(dem: &FloatGrid, r: usize, c: usize) -> Option<[f64; 9]> {
    let rows = dem.n_rows();
    let cols = dem.n_cols();
    let rs = [r.saturating_sub(1), r, (r + 1).min(rows - 1)];
    let cs = [c.saturating_sub(1), c, (c + 1).min(cols - 1)];
    let mut w = [0.0; 9];
    for (i, &rr) in rs.iter().enumerate() {
        for (j, &cc) in cs.iter().enumerate() {
            let v = dem.get(rr, cc);
            if dem.is_nodata(v) {
                return None;
            }
            w[i * 3 + j] = v;
        }
    }
    Some(w)
}

/// Horn gradient `(dz/dx east, dz/dy north)`.
#[inline]
fn horn(w: &[f64; 9], cs: f64) -> (f64, f64) {
    let [a, b, c, d, _, f, g, h, i] = *w;
    let dzdx = ((c + 2.0 * f + i) - (a + 2.0 * d + g)) / (8.0 * cs);
    let dzdy = ((a + 2.0 * b + c) - (g + 2.0 * h + i)) / (8.0 * cs);
    (dzdx, dzdy)
}

fn map_window(dem: &FloatGrid, f: impl Fn(&[f64; 9]) -> f64 + Sync) -> FloatGrid {
    let nodata = dem.nodata();
    let values = map_cells(dem.n_rows(), dem.n_cols(), |r, c| match window(dem, r, c) {
        Some(w) => f(&w),
        None => nodata,
    });
    dem.with_values(values, nodata)
}

/// Slope in degrees, `[0, 90)`.
pub fn slope_degrees(dem: &FloatGrid) -> Result<FloatGrid> {
    let cs = dem.cell_size();
    Ok(map_window(dem, |w| {
        let (p, q) = horn(w, cs);
        p.hypot(q).atan().to_degrees()
    }))
}

/// Direction of steepest descent in degrees clockwise from north, `[0, 360)`;
/// [`FLAT_ASPECT`] where the gradient vanishes.
pub fn aspect_degrees(dem: &FloatGrid) -> Result<FloatGrid> {
    let cs = dem.cell_size();
    Ok(map_window(dem, |w| {
        let (p, q) = horn(w, cs);
        if p.hypot(q) < FLAT_GRADIENT {
            return FLAT_ASPECT;
        }
        let deg = (-p).atan2(-q).to_degrees();
        let deg = if deg < 0.0 { deg + 360.0 } else { deg };
        if deg >= 360.0 {
            0.0
        } else {
            deg
        }
    }))
}

/// General curvature ×100, positive on upwardly convex surfaces.
pub fn curvature(dem: &FloatGrid) -> Result<FloatGrid> {
    let l2 = dem.cell_size() * dem.cell_size();
    Ok(map_window(dem, |w| {
        let [_, b, _, d, e, f, _, h, _] = *w;
        let dxx = ((d + f) / 2.0 - e) / l2;
        let dyy = ((b + h) / 2.0 - e) / l2;
        let k = -2.0 * (dxx + dyy) * 100.0;
        // avoid -0.0 on planes
        if k == 0.0 {
            0.0
        } else {
            k
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{GeoRef, Grid, DEFAULT_NODATA};

    /// `z = f(x, y)` sampled at cell centres, x east and y north of the
    /// grid centre.
    fn surface(n: usize, cs: f64, f: impl Fn(f64, f64) -> f64) -> FloatGrid {
        let g = GeoRef::new(0.0, 0.0, cs, n, n).unwrap();
        let mid = (n as f64 - 1.0) / 2.0;
        Grid::from_fn(g, DEFAULT_NODATA, |r, c| {
            f((c as f64 - mid) * cs, (mid - r as f64) * cs)
        })
        .unwrap()
    }

    fn interior(g: &FloatGrid) -> Vec<f64> {
        let mut v = vec![];
        for r in 1..g.n_rows() - 1 {
            for c in 1..g.n_cols() - 1 {
                v.push(g.get(r, c));
            }
        }
        v
    }

    #[test]
    fn flat_dem() {
        let dem = surface(5, 30.0, |_, _| 12.0);
        assert!(slope_degrees(&dem).unwrap().values().iter().all(|&v| v == 0.0));
        assert!(aspect_degrees(&dem).unwrap().values().iter().all(|&v| v == FLAT_ASPECT));
        assert!(curvature(&dem).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn planes() {
        let s = slope_degrees(&surface(6, 1.0, |x, _| x)).unwrap();
        interior(&s).iter().for_each(|v| assert!((v - 45.0).abs() < 1e-9));
        let s = slope_degrees(&surface(6, 1.0, |x, _| 0.5 * x)).unwrap();
        interior(&s)
            .iter()
            .for_each(|v| assert!((v - 0.5f64.atan().to_degrees()).abs() < 1e-9));
        let a = aspect_degrees(&surface(6, 1.0, |x, _| -x)).unwrap();
        interior(&a).iter().for_each(|v| assert!((v - 90.0).abs() < 1e-9));
        let a = aspect_degrees(&surface(6, 1.0, |_, y| -y)).unwrap();
        interior(&a).iter().for_each(|v| assert!(v.abs() < 1e-9));
    }

    #[test]
    fn quadratics() {
        let k = curvature(&surface(7, 1.0, |x, y| x * x + y * y)).unwrap();
        interior(&k).iter().for_each(|v| assert!((v + 400.0).abs() < 1e-9));
        let k = curvature(&surface(7, 1.0, |x, y| -(x * x + y * y))).unwrap();
        interior(&k).iter().for_each(|v| assert!((v - 400.0).abs() < 1e-9));
        let k = curvature(&surface(7, 10.0, |x, y| 3.0 * x - 2.0 * y + 7.0)).unwrap();
        interior(&k).iter().for_each(|v| assert!(v.abs() < 1e-9));
    }

    #[test]
    fn nodata_propagates_to_neighbours() {
        let mut dem = surface(5, 1.0, |x, _| x);
        dem.set(2, 2, DEFAULT_NODATA);
        let s = slope_degrees(&dem).unwrap();
        for r in 1..=3 {
            for c in 1..=3 {
                assert!(s.is_nodata(s.get(r, c)));
            }
        }
        assert!(!s.is_nodata(s.get(0, 0)));
    }

    #[test]
    fn single_cell_grid() {
        let dem = surface(1, 30.0, |_, _| 5.0);
        assert_eq!(slope_degrees(&dem).unwrap().values(), &[0.0]);
    }
}
