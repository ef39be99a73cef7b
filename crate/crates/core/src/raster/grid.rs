use std::fmt::{Debug, Display};
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_NODATA: f64 = -9999.0;
pub const DEFAULT_CLASS_NODATA: i32 = -9999;

/// Georeferencing of a north-up lattice with square cells.
///
/// `x_origin`/`y_origin` are the lower-left corner of the lower-left cell,
/// as in the ESRI ASCII Grid `xllcorner`/`yllcorner` header keys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoRef {
    pub x_origin: f64,
    pub y_origin: f64,
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl GeoRef {
    pub fn new(
        x_origin: f64,
        y_origin: f64,
        cell_size: f64,
        n_rows: usize,
        n_cols: usize,
    ) -> Result<Self> {
        let g = GeoRef {
            x_origin,
            y_origin,
            cell_size,
            n_rows,
            n_cols,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0) || !self.cell_size.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "cell_size must be positive, got {}",
                self.cell_size
            )));
        }
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::InvalidGrid(format!(
                "grid must be at least 1x1, got {}x{}",
                self.n_rows, self.n_cols
            )));
        }
        if !self.x_origin.is_finite() || !self.y_origin.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    /// Northing of the top edge of row 0.
    pub fn y_top(&self) -> f64 {
        self.y_origin + self.n_rows as f64 * self.cell_size
    }

    /// Map coordinates of the centre of `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let x = self.x_origin + (col as f64 + 0.5) * self.cell_size;
        let y = self.y_top() - (row as f64 + 0.5) * self.cell_size;
        (x, y)
    }

    /// Cell containing the map coordinate, using floor on both axes with rows
    /// counted from the top edge. Points on a shared edge land in the
    /// east/south cell.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let col = ((x - self.x_origin) / self.cell_size).floor();
        let row = ((self.y_top() - y) / self.cell_size).floor();
        if col < 0.0 || row < 0.0 || col >= self.n_cols as f64 || row >= self.n_rows as f64 {
            return None;
        }
        Some((row as usize, col as usize))
    }

    /// Returns the first field that differs, if any.
    pub fn first_difference(&self, other: &GeoRef) -> Option<(&'static str, String, String)> {
        macro_rules! cmp {
            ($f:ident) => {
                if self.$f != other.$f {
                    return Some((
                        stringify!($f),
                        self.$f.to_string(),
                        other.$f.to_string(),
                    ));
                }
            };
        }
        cmp!(n_cols);
        cmp!(n_rows);
        cmp!(x_origin);
        cmp!(y_origin);
        cmp!(cell_size);
        None
    }

    pub fn check_aligned(&self, other: &GeoRef) -> Result<()> {
        match self.first_difference(other) {
            None => Ok(()),
            Some((field, left, right)) => Err(Error::Alignment { field, left, right }),
        }
    }
}

/// Value types a grid can carry.
pub trait CellValue:
    Copy + PartialEq + PartialOrd + Debug + Display + FromStr + Send + Sync + 'static
{
    fn is_nodata_value(self, nodata: Self) -> bool;
    fn to_f64(self) -> f64;
}

impl CellValue for f64 {
    #[inline]
    fn is_nodata_value(self, nodata: Self) -> bool {
        self == nodata || self.is_nan()
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl CellValue for i32 {
    #[inline]
    fn is_nodata_value(self, nodata: Self) -> bool {
        self == nodata
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

/// Row-major raster, row 0 northernmost.
///
/// `Grid<f64>` is a continuous layer, `Grid<i32>` a categorical (class ID)
/// layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    georef: GeoRef,
    values: Vec<T>,
    nodata: T,
}

pub type FloatGrid = Grid<f64>;
pub type ClassGrid = Grid<i32>;
/// Binary feature mask: 1 present, 0 absent.
pub type MaskGrid = Grid<i32>;

impl<T: CellValue> Grid<T> {
    pub fn new(georef: GeoRef, values: Vec<T>, nodata: T) -> Result<Self> {
        georef.validate()?;
        if values.len() != georef.len() {
            return Err(Error::InvalidGrid(format!(
                "value count mismatch: expected {}x{}={} values, got {}",
                georef.n_rows,
                georef.n_cols,
                georef.len(),
                values.len()
            )));
        }
        Ok(Grid {
            georef,
            values,
            nodata,
        })
    }

    pub fn filled(georef: GeoRef, value: T, nodata: T) -> Result<Self> {
        georef.validate()?;
        Ok(Grid {
            georef,
            values: vec![value; georef.len()],
            nodata,
        })
    }

    /// Builds a grid by evaluating `f(row, col)` for every cell.
    pub fn from_fn(georef: GeoRef, nodata: T, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        georef.validate()?;
        let mut values = Vec::with_capacity(georef.len());
        for r in 0..georef.n_rows {
            for c in 0..georef.n_cols {
                values.push(f(r, c));
            }
        }
        Ok(Grid {
            georef,
            values,
            nodata,
        })
    }

    /// Same lattice and nodata sentinel, new values.
    pub(crate) fn with_values<U: CellValue>(&self, values: Vec<U>, nodata: U) -> Grid<U> {
        debug_assert_eq!(values.len(), self.georef.len());
        Grid {
            georef: self.georef,
            values,
            nodata,
        }
    }

    pub fn georef(&self) -> &GeoRef {
        &self.georef
    }

    pub fn n_rows(&self) -> usize {
        self.georef.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.georef.n_cols
    }

    pub fn cell_size(&self) -> f64 {
        self.georef.cell_size
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn nodata(&self) -> T {
        self.nodata
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.georef.n_cols + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[self.index(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        let i = self.index(row, col);
        self.values[i] = value;
    }

    #[inline]
    pub fn is_nodata(&self, value: T) -> bool {
        value.is_nodata_value(self.nodata)
    }

    #[inline]
    pub fn is_nodata_at(&self, idx: usize) -> bool {
        self.values[idx].is_nodata_value(self.nodata)
    }

    /// Value at `idx`, or `None` for nodata.
    #[inline]
    pub fn value_at(&self, idx: usize) -> Option<T> {
        let v = self.values[idx];
        (!v.is_nodata_value(self.nodata)).then_some(v)
    }

    pub fn valid_values(&self) -> impl Iterator<Item = T> + '_ {
        self.values
            .iter()
            .copied()
            .filter(move |v| !v.is_nodata_value(self.nodata))
    }

    pub fn count_valid(&self) -> usize {
        self.valid_values().count()
    }

    /// Minimum and maximum over non-nodata cells.
    pub fn min_max(&self) -> Option<(T, T)> {
        let mut it = self.valid_values();
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| {
            (
                if v < lo { v } else { lo },
                if v > hi { v } else { hi },
            )
        }))
    }

    pub fn check_aligned<U: CellValue>(&self, other: &Grid<U>) -> Result<()> {
        self.georef.check_aligned(&other.georef)
    }
}

impl Grid<f64> {
    /// Converts a continuous grid whose valid values are non-negative
    /// integers into a class grid.
    pub fn to_categorical(&self) -> Result<ClassGrid> {
        let mut out = Vec::with_capacity(self.len());
        for (i, &v) in self.values.iter().enumerate() {
            if v.is_nodata_value(self.nodata) {
                out.push(DEFAULT_CLASS_NODATA);
                continue;
            }
            if v < 0.0 || v.fract() != 0.0 || v > i32::MAX as f64 {
                return Err(Error::InvalidGrid(format!(
                    "cell {} (row {}, col {}) holds {}, not a non-negative integer class ID",
                    i,
                    i / self.n_cols(),
                    i % self.n_cols(),
                    v
                )));
            }
            out.push(v as i32);
        }
        Ok(self.with_values(out, DEFAULT_CLASS_NODATA))
    }
}

impl Grid<i32> {
    pub fn to_continuous(&self) -> FloatGrid {
        let nodata = self.nodata as f64;
        let values = self.values.iter().map(|&v| v as f64).collect();
        self.with_values(values, nodata)
    }

    /// Checks that every valid cell of a class grid is a non-negative ID.
    pub fn validate_classes(&self) -> Result<()> {
        match self.valid_values().find(|&v| v < 0) {
            Some(v) => Err(Error::InvalidGrid(format!(
                "negative class ID {v} in categorical grid"
            ))),
            None => Ok(()),
        }
    }

    /// Checks that every valid cell is 0 or 1.
    pub fn validate_mask(&self) -> Result<()> {
        match self.valid_values().find(|&v| v != 0 && v != 1) {
            Some(v) => Err(Error::InvalidGrid(format!(
                "mask grids hold 0/1, found {v}"
            ))),
            None => Ok(()),
        }
    }
}

/// Fails with the first differing field unless every grid shares one lattice.
pub fn align_check(georefs: &[&GeoRef]) -> Result<()> {
    let (first, rest) = georefs
        .split_first()
        .ok_or_else(|| Error::invalid("align_check needs at least one grid"))?;
    rest.iter().try_for_each(|g| first.check_aligned(g))
}
