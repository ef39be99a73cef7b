//! Landslide inventory points and their rasterization onto the lattice.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{GeoRef, Grid, MaskGrid, DEFAULT_CLASS_NODATA};
use crate::report::{csv_field, sig};

#[derive(Debug, Clone, PartialEq)]
pub struct InventoryPoint {
    pub x: f64,
    pub y: f64,
    pub id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InventoryPoints {
    pub points: Vec<InventoryPoint>,
}

impl InventoryPoints {
    pub fn new(points: Vec<InventoryPoint>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::invalid(format!(
                "inventory point ({}, {}) has non-finite coordinates",
                p.x, p.y
            )));
        }
        Ok(InventoryPoints { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reads a CSV with header `x,y` or `x,y,id`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let cerr = |message: String| Error::Csv {
            path: path.to_path_buf(),
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.kind() {
                csv::ErrorKind::Io(_) => Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
                ),
                _ => cerr(e.to_string()),
            })?;
        let headers = rdr.headers().map_err(|e| cerr(e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let (xi, yi) = match (col("x"), col("y")) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(cerr(format!("header must contain x and y, got `{}`", headers.iter().collect::<Vec<_>>().join(",")))),
        };
        let idi = col("id");
        let mut points = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| cerr(e.to_string()))?;
            let line = n + 2;
            let num = |i: usize, what: &str| -> Result<f64> {
                let raw = rec.get(i).unwrap_or("");
                raw.parse()
                    .map_err(|_| cerr(format!("line {line}: `{raw}` is not a valid {what}")))
            };
            points.push(InventoryPoint {
                x: num(xi, "x")?,
                y: num(yi, "y")?,
                id: idi.and_then(|i| rec.get(i)).filter(|s| !s.is_empty()).map(str::to_owned),
            });
        }
        Self::new(points)
    }

    pub fn to_csv(&self) -> String {
        let with_id = self.points.iter().any(|p| p.id.is_some());
        let mut s = String::from(if with_id { "x,y,id\n" } else { "x,y\n" });
        for p in &self.points {
            s.push_str(&sig(p.x, 17));
            s.push(',');
            s.push_str(&sig(p.y, 17));
            if with_id {
                s.push(',');
                s.push_str(&csv_field(p.id.as_deref().unwrap_or("")));
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// One point at the centre of every mask cell equal to 1, in row-major
    /// order.
    pub fn from_mask(mask: &MaskGrid) -> Self {
        let g = mask.georef();
        let points = (0..mask.len())
            .filter(|&i| mask.value_at(i) == Some(1))
            .map(|i| {
                let (x, y) = g.cell_center(i / g.n_cols, i % g.n_cols);
                InventoryPoint { x, y, id: None }
            })
            .collect();
        InventoryPoints { points }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rasterized {
    pub mask: MaskGrid,
    /// Points falling outside the template extent.
    pub skipped: usize,
}

/// Marks the cell containing each point (see [`GeoRef::locate`]).
pub fn rasterize_inventory(points: &InventoryPoints, template: &GeoRef) -> Result<Rasterized> {
    template.validate()?;
    let mut values = vec![0i32; template.len()];
    let mut skipped = 0;
    for p in &points.points {
        match template.locate(p.x, p.y) {
            Some((r, c)) => values[r * template.n_cols + c] = 1,
            None => skipped += 1,
        }
    }
    if skipped == points.len() {
        return Err(Error::EmptyInventory(format!(
            "all {} inventory points fall outside the grid extent",
            points.len()
        )));
    }
    if skipped > 0 {
        log::warn!("{skipped} inventory point(s) outside the grid extent were skipped");
    }
    Ok(Rasterized {
        mask: Grid::new(*template, values, DEFAULT_CLASS_NODATA)?,
        skipped,
    })
}
