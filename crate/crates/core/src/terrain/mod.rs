//! Terrain derivatives of a DEM and related per-cell indices.

mod flow;
mod indices;
mod surface;

pub use flow::{
    fill_depressions, flow_accumulation, flow_direction_d8, FlowDir, FlowDirGrid, D8_CODES,
};
pub use indices::{cut_fill, ndvi, spi, twi, CutFill, CutFillClass, MIN_TAN_SLOPE};
pub use surface::{aspect_degrees, curvature, slope_degrees, FLAT_ASPECT};
