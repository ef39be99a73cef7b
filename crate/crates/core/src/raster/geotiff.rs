//! Single-band GeoTIFF import/export (north-up, square pixels).
//!
//! Georeferencing is carried by the ModelPixelScale and ModelTiepoint tags;
//! the nodata sentinel by the GDAL_NODATA ASCII tag.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use tiff::decoder::{Decoder, DecodingResult};
use tiff::encoder::{colortype, TiffEncoder};
use tiff::tags::Tag;

use super::grid::{GeoRef, Grid, DEFAULT_NODATA};
use crate::error::{Error, Result};

fn terr(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("tiff: {e}"),
    }
}

pub fn read_geotiff(path: impl AsRef<Path>) -> Result<Grid<f64>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = Decoder::new(file).map_err(|e| terr(path, e))?;
    let (w, h) = dec.dimensions().map_err(|e| terr(path, e))?;
    let scale = dec
        .get_tag_f64_vec(Tag::ModelPixelScaleTag)
        .map_err(|e| terr(path, e))?;
    let tie = dec
        .get_tag_f64_vec(Tag::ModelTiepointTag)
        .map_err(|e| terr(path, e))?;
    if scale.len() < 2 || tie.len() < 6 {
        return Err(terr(path, "malformed georeferencing tags"));
    }
    if scale[0] != scale[1] {
        return Err(terr(path, "non-square pixels are not supported"));
    }
    let nodata = match dec.get_tag_ascii_string(Tag::GdalNodata) {
        Ok(s) => s
            .trim_matches(char::from(0))
            .trim()
            .parse()
            .map_err(|_| terr(path, format!("bad GDAL_NODATA `{s}`")))?,
        Err(_) => DEFAULT_NODATA,
    };
    let cs = scale[0];
    let (n_rows, n_cols) = (h as usize, w as usize);
    let x0 = tie[3] - tie[0] * cs;
    let y_top = tie[4] + tie[1] * cs;
    let georef = GeoRef::new(x0, y_top - n_rows as f64 * cs, cs, n_rows, n_cols)?;
    let values: Vec<f64> = match dec.read_image().map_err(|e| terr(path, e))? {
        DecodingResult::F64(v) => v,
        DecodingResult::F32(v) => v.into_iter().map(f64::from).collect(),
        DecodingResult::U8(v) => v.into_iter().map(f64::from).collect(),
        DecodingResult::U16(v) => v.into_iter().map(f64::from).collect(),
        DecodingResult::I16(v) => v.into_iter().map(f64::from).collect(),
        DecodingResult::I32(v) => v.into_iter().map(f64::from).collect(),
        DecodingResult::U32(v) => v.into_iter().map(f64::from).collect(),
        _ => return Err(terr(path, "unsupported sample format")),
    };
    Grid::new(georef, values, nodata)
}

pub fn write_geotiff(grid: &Grid<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let g = grid.georef();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = TiffEncoder::new(BufWriter::new(file)).map_err(|e| terr(path, e))?;
    let mut img = enc
        .new_image::<colortype::Gray64Float>(g.n_cols as u32, g.n_rows as u32)
        .map_err(|e| terr(path, e))?;
    let scale = [g.cell_size, g.cell_size, 0.0];
    let tie = [0.0, 0.0, 0.0, g.x_origin, g.y_top(), 0.0];
    let nodata = format!("{}", grid.nodata());
    {
        let dir = img.encoder();
        dir.write_tag(Tag::ModelPixelScaleTag, &scale[..])
            .map_err(|e| terr(path, e))?;
        dir.write_tag(Tag::ModelTiepointTag, &tie[..])
            .map_err(|e| terr(path, e))?;
        dir.write_tag(Tag::GdalNodata, nodata.as_str())
            .map_err(|e| terr(path, e))?;
    }
    img.write_data(grid.values()).map_err(|e| terr(path, e))
}
