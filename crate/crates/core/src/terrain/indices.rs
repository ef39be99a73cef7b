//! Per-cell hydrological and spectral indices, and DEM differencing.

use crate::error::{Error, Result};
use crate::par::map_index;
use crate::raster::{ClassGrid, FloatGrid, DEFAULT_CLASS_NODATA, DEFAULT_NODATA};

/// Lower clamp on `tan(slope)` so flats stay finite.
pub const MIN_TAN_SLOPE: f64 = 1e-6;

/// Specific catchment area proxy `(acc + 1) · cell_size` and clamped
/// `tan β` for one cell.
#[inline]
fn catchment_terms(acc: f64, slope_deg: f64, cell_size: f64) -> (f64, f64) {
    let area = (acc + 1.0) * cell_size;
    let tan_b = slope_deg.to_radians().tan().max(MIN_TAN_SLOPE);
    (area, tan_b)
}

fn combine(
    acc: &FloatGrid,
    slope_deg: &FloatGrid,
    f: impl Fn(f64, f64) -> f64 + Sync + Send,
) -> Result<FloatGrid> {
    acc.check_aligned(slope_deg)?;
    if let Some(v) = acc.valid_values().find(|&v| v < 0.0) {
        return Err(Error::invalid(format!("flow accumulation must be >= 0, found {v}")));
    }
    let cs = acc.cell_size();
    let values = map_index(acc.len(), |i| match (acc.value_at(i), slope_deg.value_at(i)) {
        (Some(a), Some(s)) => {
            let (area, tan_b) = catchment_terms(a, s, cs);
            f(area, tan_b)
        }
        _ => DEFAULT_NODATA,
    });
    Ok(acc.with_values(values, DEFAULT_NODATA))
}

/// Stream power index `ln(A · tan β)`.
pub fn spi(acc: &FloatGrid, slope_deg: &FloatGrid) -> Result<FloatGrid> {
    combine(acc, slope_deg, |area, tan_b| (area * tan_b).ln())
}

/// Topographic wetness index `ln(A / tan β)`.
pub fn twi(acc: &FloatGrid, slope_deg: &FloatGrid) -> Result<FloatGrid> {
    combine(acc, slope_deg, |area, tan_b| (area / tan_b).ln())
}

/// `(IR − R) / (IR + R)` clamped to `[-1, 1]`; nodata where `IR + R = 0`.
pub fn ndvi(ir_band: &FloatGrid, red_band: &FloatGrid) -> Result<FloatGrid> {
    ir_band.check_aligned(red_band)?;
    let values = map_index(ir_band.len(), |i| {
        match (ir_band.value_at(i), red_band.value_at(i)) {
            (Some(ir), Some(r)) => {
                let sum = ir + r;
                if sum == 0.0 {
                    DEFAULT_NODATA
                } else {
                    ((ir - r) / sum).clamp(-1.0, 1.0)
                }
            }
            _ => DEFAULT_NODATA,
        }
    });
    Ok(ir_band.with_values(values, DEFAULT_NODATA))
}

/// Cut-fill classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum CutFillClass {
    Unchanged = 0,
    NetGain = 1,
    NetLoss = 2,
}

impl CutFillClass {
    pub fn label(self) -> &'static str {
        match self {
            CutFillClass::Unchanged => "Unchanged",
            CutFillClass::NetGain => "Net Gain",
            CutFillClass::NetLoss => "Net Loss",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutFill {
    pub classes: ClassGrid,
    /// Material removed, `Σ |Δz| · cell_area` over net-loss cells.
    pub cut_volume: f64,
    /// Material added, `Σ |Δz| · cell_area` over net-gain cells.
    pub fill_volume: f64,
}

pub fn cut_fill(dem_old: &FloatGrid, dem_new: &FloatGrid, tau: f64) -> Result<CutFill> {
    dem_old.check_aligned(dem_new)?;
    if !(tau >= 0.0) {
        return Err(Error::invalid(format!("cut-fill tolerance must be >= 0, got {tau}")));
    }
    let cell_area = dem_old.georef().cell_area();
    let mut classes = Vec::with_capacity(dem_old.len());
    let (mut cut, mut fill) = (0.0, 0.0);
    for i in 0..dem_old.len() {
        let class = match (dem_old.value_at(i), dem_new.value_at(i)) {
            (Some(old), Some(new)) => {
                let dz = new - old;
                if dz > tau {
                    fill += dz * cell_area;
                    CutFillClass::NetGain as i32
                } else if -dz > tau {
                    cut += -dz * cell_area;
                    CutFillClass::NetLoss as i32
                } else {
                    CutFillClass::Unchanged as i32
                }
            }
            _ => DEFAULT_CLASS_NODATA,
        };
        classes.push(class);
    }
    Ok(CutFill {
        classes: dem_old.with_values(classes, DEFAULT_CLASS_NODATA),
        cut_volume: cut,
        fill_volume: fill,
    })
}
