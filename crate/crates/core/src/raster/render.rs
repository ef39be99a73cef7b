use std::fs;
use std::io::BufWriter;
use std::path::Path;

use super::grid::{CellValue, Grid};
use crate::classify::ClassBreaks;
use crate::error::{Error, Result};

pub type Rgba = [u8; 4];

/// Piecewise-linear colour ramp over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorRamp {
    stops: Vec<(f64, Rgba)>,
    nodata: Rgba,
}

impl ColorRamp {
    pub fn new(stops: Vec<(f64, Rgba)>) -> Result<Self> {
        if stops.is_empty() {
            return Err(Error::Render("empty colour ramp".into()));
        }
        if stops.len() == 1 {
            return Err(Error::Render("colour ramp needs at least two stops".into()));
        }
        if stops[0].0 != 0.0 || stops[stops.len() - 1].0 != 1.0 {
            return Err(Error::Render("ramp positions must start at 0 and end at 1".into()));
        }
        if stops.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::Render("ramp positions must be strictly increasing".into()));
        }
        Ok(ColorRamp {
            stops,
            nodata: [0, 0, 0, 0],
        })
    }

    pub fn with_nodata_color(mut self, color: Rgba) -> Self {
        self.nodata = color;
        self
    }

    pub fn nodata_color(&self) -> Rgba {
        self.nodata
    }

    /// Evenly spaced stops from a list of colours.
    pub fn evenly(colors: &[Rgba]) -> Result<Self> {
        if colors.len() < 2 {
            return Self::new(colors.iter().map(|&c| (0.0, c)).collect());
        }
        let n = (colors.len() - 1) as f64;
        let stops = colors
            .iter()
            .enumerate()
            .map(|(i, &c)| (if i == colors.len() - 1 { 1.0 } else { i as f64 / n }, c))
            .collect();
        Self::new(stops)
    }

    /// Green through yellow to red, for susceptibility layers.
    pub fn susceptibility() -> Self {
        Self::evenly(&[
            [26, 150, 65, 255],
            [166, 217, 106, 255],
            [255, 255, 191, 255],
            [253, 174, 97, 255],
            [215, 25, 28, 255],
        ])
        .expect("static ramp")
    }

    /// Hypsometric-style ramp for elevation and other continuous layers.
    pub fn terrain() -> Self {
        Self::evenly(&[
            [0, 104, 55, 255],
            [120, 198, 121, 255],
            [255, 255, 191, 255],
            [166, 97, 26, 255],
            [255, 255, 255, 255],
        ])
        .expect("static ramp")
    }

    pub fn grayscale() -> Self {
        Self::evenly(&[[0, 0, 0, 255], [255, 255, 255, 255]]).expect("static ramp")
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "susceptibility" => Some(Self::susceptibility()),
            "terrain" => Some(Self::terrain()),
            "grayscale" | "gray" => Some(Self::grayscale()),
            _ => None,
        }
    }

    /// Colour at normalized position `t` (clamped to `[0, 1]`).
    pub fn color_at(&self, t: f64) -> Rgba {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        let hi = self.stops.partition_point(|(p, _)| *p < t);
        if hi == 0 {
            return self.stops[0].1;
        }
        let (p0, c0) = self.stops[hi - 1];
        let (p1, c1) = self.stops[hi];
        let f = (t - p0) / (p1 - p0);
        let mut out = [0u8; 4];
        for k in 0..4 {
            out[k] = (c0[k] as f64 + f * (c1[k] as f64 - c0[k] as f64)).round() as u8;
        }
        out
    }
}

/// Maps each cell to an RGBA pixel. Continuous values are stretched
/// min..max over the ramp; with `breaks`, class `i` of `k` is placed at
/// `(i-1)/(k-1)`.
pub fn render_rgba<T: CellValue>(
    grid: &Grid<T>,
    ramp: &ColorRamp,
    breaks: Option<&ClassBreaks>,
) -> Result<Vec<u8>> {
    if grid.is_empty() {
        return Err(Error::Render("empty grid".into()));
    }
    let (lo, hi) = grid
        .min_max()
        .map(|(a, b)| (a.to_f64(), b.to_f64()))
        .ok_or_else(|| Error::Render("grid has no valid cells".into()))?;
    let span = hi - lo;
    let position = |v: f64| -> f64 {
        match breaks {
            Some(b) => {
                let k = b.class_count();
                if k <= 1 {
                    0.0
                } else {
                    (b.class_of(v) - 1) as f64 / (k - 1) as f64
                }
            }
            None if span > 0.0 => (v - lo) / span,
            None => 0.0,
        }
    };
    let mut buf = Vec::with_capacity(grid.len() * 4);
    for &v in grid.values() {
        let px = if grid.is_nodata(v) {
            ramp.nodata
        } else {
            ramp.color_at(position(v.to_f64()))
        };
        buf.extend_from_slice(&px);
    }
    Ok(buf)
}

pub fn render_png<T: CellValue>(
    grid: &Grid<T>,
    ramp: &ColorRamp,
    breaks: Option<&ClassBreaks>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let rgba = render_rgba(grid, ramp, breaks)?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(
        BufWriter::new(file),
        grid.n_cols() as u32,
        grid.n_rows() as u32,
    );
    enc.set_color(png::ColorType::Rgba);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc
        .write_header()
        .map_err(|e| Error::Render(e.to_string()))?;
    writer
        .write_image_data(&rgba)
        .map_err(|e| Error::Render(e.to_string()))?;
    writer.finish().map_err(|e| Error::Render(e.to_string()))
}
