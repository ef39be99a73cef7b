//! C ABI over `lsmap`.
//!
//! Grids cross the boundary as opaque `LsmGrid` handles owned by the caller
//! and released with `lsm_grid_free`. Every fallible call returns an
//! `LsmStatus`; on failure `lsm_last_error` returns a message for the
//! calling thread. Panics are caught and reported as `LSM_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use lsmap::classify::{jenks_breaks, reclassify, ClassBreaks};
use lsmap::fr::{frequency_ratio, FactorFrTable};
use lsmap::hydro::{drainage_density, euclidean_distance};
use lsmap::raster::{read_ascii_grid, write_ascii_grid};
use lsmap::terrain::{
    aspect_degrees, curvature, fill_depressions, flow_accumulation, flow_direction_d8, ndvi,
    slope_degrees, spi, twi,
};
use lsmap::validation::{auc, RateCurve};
use lsmap::{Error, ErrorCategory, FloatGrid, GeoRef, Grid};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Panic = 99,
}

/// Opaque continuous grid. Class and mask grids use the same handle with
/// integral values.
pub struct LsmGrid {
    inner: FloatGrid,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

type FfiResult<T> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> LsmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LsmStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer passed for `{what}`"));
            LsmStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            let status = match (&e, e.category()) {
                (Error::InvalidArgument(_), _) => LsmStatus::InvalidArgument,
                (_, ErrorCategory::Io) => LsmStatus::Io,
                (_, ErrorCategory::Input) => LsmStatus::Parse,
                (_, ErrorCategory::Validation) => LsmStatus::Validation,
            };
            set_error(e.to_string());
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            LsmStatus::Panic
        }
    }
}

unsafe fn grid_ref<'a>(g: *const LsmGrid, what: &'static str) -> FfiResult<&'a FloatGrid> {
    g.as_ref().map(|g| &g.inner).ok_or(Fail::Null(what))
}

unsafe fn path_arg(p: *const c_char, what: &'static str) -> FfiResult<PathBuf> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidArgument(format!("`{what}` is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &'static str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn emit(out: *mut *mut LsmGrid, g: FloatGrid) -> FfiResult<()> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(LsmGrid { inner: g }));
    Ok(())
}

fn as_float<T: lsmap::raster::CellValue>(g: &Grid<T>) -> FloatGrid {
    let values = g.values().iter().map(|v| v.to_f64()).collect();
    Grid::new(*g.georef(), values, g.nodata().to_f64()).expect("same shape")
}

/// Message describing the last failure on this thread, or NULL. Valid
/// until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn lsm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a grid from `n_rows * n_cols` row-major values (row 0 = north).
///
/// # Safety
/// `values` must point to `n_rows * n_cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_grid_new(
    n_rows: usize,
    n_cols: usize,
    x_origin: f64,
    y_origin: f64,
    cell_size: f64,
    nodata: f64,
    values: *const f64,
    out: *mut *mut LsmGrid,
) -> LsmStatus {
    guard(|| {
        let g = GeoRef::new(x_origin, y_origin, cell_size, n_rows, n_cols)?;
        let v = slice_arg(values, n_rows.saturating_mul(n_cols), "values")?;
        emit(out, Grid::new(g, v.to_vec(), nodata)?)
    })
}

/// Releases a grid. NULL is ignored.
///
/// # Safety
/// `grid` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lsm_grid_free(grid: *mut LsmGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_grid_read_ascii(path: *const c_char, out: *mut *mut LsmGrid) -> LsmStatus {
    guard(|| emit(out, read_ascii_grid(path_arg(path, "path")?)?))
}

/// # Safety
/// `grid` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lsm_grid_write_ascii(grid: *const LsmGrid, path: *const c_char) -> LsmStatus {
    guard(|| Ok(write_ascii_grid(grid_ref(grid, "grid")?, path_arg(path, "path")?)?))
}

/// Grid dimensions, cell size and nodata value. Any out pointer may be NULL.
///
/// # Safety
/// `grid` must be a live handle; non-NULL out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_grid_info(
    grid: *const LsmGrid,
    n_rows: *mut usize,
    n_cols: *mut usize,
    cell_size: *mut f64,
    nodata: *mut f64,
) -> LsmStatus {
    guard(|| {
        let g = grid_ref(grid, "grid")?;
        if let Some(p) = n_rows.as_mut() {
            *p = g.n_rows();
        }
        if let Some(p) = n_cols.as_mut() {
            *p = g.n_cols();
        }
        if let Some(p) = cell_size.as_mut() {
            *p = g.cell_size();
        }
        if let Some(p) = nodata.as_mut() {
            *p = g.nodata();
        }
        Ok(())
    })
}

/// Copies all cell values (row-major) into `buf`, which must hold `len`
/// doubles with `len >= n_rows * n_cols`.
///
/// # Safety
/// `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lsm_grid_copy_values(grid: *const LsmGrid, buf: *mut f64, len: usize) -> LsmStatus {
    guard(|| {
        let g = grid_ref(grid, "grid")?;
        if len < g.len() {
            return Err(Error::InvalidArgument(format!("buffer holds {len} values, grid has {}", g.len())).into());
        }
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        slice::from_raw_parts_mut(buf, g.len()).copy_from_slice(g.values());
        Ok(())
    })
}

unsafe fn unary(
    input: *const LsmGrid,
    out: *mut *mut LsmGrid,
    f: impl FnOnce(&FloatGrid) -> lsmap::Result<FloatGrid>,
) -> LsmStatus {
    guard(|| emit(out, f(grid_ref(input, "input")?)?))
}

unsafe fn binary(
    a: (*const LsmGrid, &'static str),
    b: (*const LsmGrid, &'static str),
    out: *mut *mut LsmGrid,
    f: impl FnOnce(&FloatGrid, &FloatGrid) -> lsmap::Result<FloatGrid>,
) -> LsmStatus {
    guard(|| emit(out, f(grid_ref(a.0, a.1)?, grid_ref(b.0, b.1)?)?))
}

/// Slope in degrees (Horn).
///
/// # Safety
/// `input` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_slope(input: *const LsmGrid, out: *mut *mut LsmGrid) -> LsmStatus {
    unary(input, out, slope_degrees)
}

/// Aspect in degrees clockwise from north; -1 on flat cells.
///
/// # Safety
/// `input` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_aspect(input: *const LsmGrid, out: *mut *mut LsmGrid) -> LsmStatus {
    unary(input, out, aspect_degrees)
}

/// Curvature (x100).
///
/// # Safety
/// `input` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_curvature(input: *const LsmGrid, out: *mut *mut LsmGrid) -> LsmStatus {
    unary(input, out, curvature)
}

/// Upstream cell counts after depression filling and D8 routing.
///
/// # Safety
/// `input` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_flow_accumulation(input: *const LsmGrid, out: *mut *mut LsmGrid) -> LsmStatus {
    unary(input, out, |d: &FloatGrid| flow_accumulation(&flow_direction_d8(&fill_depressions(d))?))
}

/// Euclidean distance to cells equal to 1.
///
/// # Safety
/// `input` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_euclidean_distance(input: *const LsmGrid, out: *mut *mut LsmGrid) -> LsmStatus {
    unary(input, out, |m: &FloatGrid| euclidean_distance(&m.to_categorical()?))
}

/// Stream power index from accumulation and slope (degrees).
///
/// # Safety
/// Both inputs must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_spi(acc: *const LsmGrid, slope: *const LsmGrid, out: *mut *mut LsmGrid) -> LsmStatus {
    binary((acc, "acc"), (slope, "slope"), out, spi)
}

/// Topographic wetness index from accumulation and slope (degrees).
///
/// # Safety
/// Both inputs must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_twi(acc: *const LsmGrid, slope: *const LsmGrid, out: *mut *mut LsmGrid) -> LsmStatus {
    binary((acc, "acc"), (slope, "slope"), out, twi)
}

/// Normalized difference vegetation index.
///
/// # Safety
/// Both inputs must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_ndvi(nir: *const LsmGrid, red: *const LsmGrid, out: *mut *mut LsmGrid) -> LsmStatus {
    binary((nir, "nir"), (red, "red"), out, ndvi)
}

/// Drainage density of a 0/1 stream grid in a square window of half-width
/// `radius` map units.
///
/// # Safety
/// `streams` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_drainage_density(
    streams: *const LsmGrid,
    radius: f64,
    out: *mut *mut LsmGrid,
) -> LsmStatus {
    guard(|| {
        let s = grid_ref(streams, "streams")?.to_categorical()?;
        emit(out, drainage_density(&s, radius)?)
    })
}

/// Reclassifies with right-closed class upper bounds; classes are 1-based.
///
/// # Safety
/// `uppers` must hold `n_uppers` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_reclassify(
    input: *const LsmGrid,
    uppers: *const f64,
    n_uppers: usize,
    out: *mut *mut LsmGrid,
) -> LsmStatus {
    guard(|| {
        let g = grid_ref(input, "input")?;
        let breaks = ClassBreaks::manual(slice_arg(uppers, n_uppers, "uppers")?.to_vec())?;
        emit(out, as_float(&reclassify(g, &breaks)?))
    })
}

/// Natural-breaks class upper bounds of `values` into `uppers_out[k]`.
///
/// # Safety
/// `values` must hold `n` doubles and `uppers_out` must be writable for `k`.
#[no_mangle]
pub unsafe extern "C" fn lsm_jenks_breaks(values: *const f64, n: usize, k: usize, uppers_out: *mut f64) -> LsmStatus {
    guard(|| {
        let b = jenks_breaks(slice_arg(values, n, "values")?, k)?;
        if uppers_out.is_null() {
            return Err(Fail::Null("uppers_out"));
        }
        slice::from_raw_parts_mut(uppers_out, k).copy_from_slice(b.uppers());
        Ok(())
    })
}

/// Frequency ratio per class from class pixel counts and landslide pixel
/// counts, written to `fr_out[len]`.
///
/// # Safety
/// All three arrays must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn lsm_frequency_ratio(
    class_pixels: *const u64,
    slide_pixels: *const u64,
    len: usize,
    fr_out: *mut f64,
) -> LsmStatus {
    guard(|| {
        let n = slice_arg(class_pixels, len, "class_pixels")?;
        let s = slice_arg(slide_pixels, len, "slide_pixels")?;
        let rows = n
            .iter()
            .zip(s)
            .enumerate()
            .map(|(i, (&n, &s))| (i as i32 + 1, String::new(), n, s));
        let table = frequency_ratio(FactorFrTable::from_counts("ffi", rows)?)?;
        if fr_out.is_null() {
            return Err(Fail::Null("fr_out"));
        }
        let out = slice::from_raw_parts_mut(fr_out, len);
        for (o, c) in out.iter_mut().zip(&table.classes) {
            *o = c.fr;
        }
        Ok(())
    })
}

/// Area under a rate curve given as `len` points sorted by x, starting at
/// (0,0) and ending at (1,1).
///
/// # Safety
/// `xs` and `ys` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lsm_auc(xs: *const f64, ys: *const f64, len: usize, out: *mut f64) -> LsmStatus {
    guard(|| {
        let x = slice_arg(xs, len, "xs")?;
        let y = slice_arg(ys, len, "ys")?;
        let curve = RateCurve::new(x.iter().copied().zip(y.iter().copied()).collect())?;
        let a = auc(&curve)?;
        *out.as_mut().ok_or(Fail::Null("out"))? = a;
        Ok(())
    })
}
