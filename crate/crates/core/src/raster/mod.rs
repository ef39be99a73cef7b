//! Grid data model, lattice alignment, file I/O and map rendering.

pub mod ascii;
#[cfg(feature = "geotiff")]
pub mod geotiff;
pub mod grid;
pub mod render;

use std::path::Path;

pub use ascii::{read_ascii_grid, write_ascii_grid};
pub use grid::{
    align_check, CellValue, ClassGrid, FloatGrid, GeoRef, Grid, MaskGrid, DEFAULT_CLASS_NODATA,
    DEFAULT_NODATA,
};
pub use render::{render_png, ColorRamp};

use crate::error::Result;

fn is_tiff(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
        Some(ref e) if e == "tif" || e == "tiff"
    )
}

/// Reads a continuous grid, choosing the format from the file extension.
pub fn read_grid(path: impl AsRef<Path>) -> Result<FloatGrid> {
    let path = path.as_ref();
    if is_tiff(path) {
        #[cfg(feature = "geotiff")]
        return geotiff::read_geotiff(path);
        #[cfg(not(feature = "geotiff"))]
        return Err(crate::Error::invalid(format!(
            "{}: GeoTIFF support requires the `geotiff` feature",
            path.display()
        )));
    }
    read_ascii_grid(path)
}

/// Writes a grid; `.tif`/`.tiff` goes to GeoTIFF, anything else to ASCII Grid.
pub fn write_grid<T: CellValue>(grid: &Grid<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if is_tiff(path) {
        #[cfg(feature = "geotiff")]
        {
            let values = grid.values().iter().map(|v| v.to_f64()).collect();
            let g = Grid::new(*grid.georef(), values, grid.nodata().to_f64())?;
            return geotiff::write_geotiff(&g, path);
        }
        #[cfg(not(feature = "geotiff"))]
        return Err(crate::Error::invalid(format!(
            "{}: GeoTIFF support requires the `geotiff` feature",
            path.display()
        )));
    }
    write_ascii_grid(grid, path)
}
