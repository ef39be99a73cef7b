//! Frequency-ratio landslide susceptibility mapping on raster grids.
//!
//! The crate covers the whole chain: terrain and hydrological factor
//! derivation from a DEM, classification, per-class frequency ratios
//! against a landslide inventory, the summed susceptibility index, five-zone
//! zonation, and success-rate validation.

pub mod classify;
pub mod error;
pub mod fr;
pub mod hydro;
pub mod inventory;
mod par;
pub mod pipeline;
pub mod raster;
pub mod report;
pub mod synthetic;
pub mod terrain;
pub mod validation;

pub use error::{Error, ErrorCategory, Result};
pub use raster::{ClassGrid, FloatGrid, GeoRef, Grid, MaskGrid};
