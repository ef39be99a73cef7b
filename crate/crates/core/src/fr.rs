//! Frequency-ratio accounting, LSI accumulation, zonation and area report.
//!
//! For class `i` of a factor, with `N_i` class pixels and `S_i` landslide
//! pixels among them:
//!
//! ```text
//! FR_i = (S_i / ΣS) / (N_i / ΣN)
//! LSI  = FR_1 + FR_2 + ... + FR_n      (one term per factor)
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::classify::{reclassify, ClassBreaks};
use crate::error::{Error, Result};
use crate::par::map_index;
use crate::raster::{align_check, ClassGrid, FloatGrid, MaskGrid, DEFAULT_NODATA};
use crate::report::{csv_field, sig6};

#[derive(Debug, Clone, PartialEq)]
pub struct FactorClassStats {
    pub class_id: i32,
    pub label: String,
    pub n_pix_class: u64,
    pub n_pix_slide: u64,
    pub pct_class: f64,
    pub pct_slide: f64,
    pub fr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorFrTable {
    pub factor: String,
    pub classes: Vec<FactorClassStats>,
    pub total_class: u64,
    pub total_slide: u64,
}

impl FactorFrTable {
    /// Table from raw `(class_id, label, N_i, S_i)` counts, ratios unfilled.
    pub fn from_counts(
        factor: impl Into<String>,
        rows: impl IntoIterator<Item = (i32, String, u64, u64)>,
    ) -> Result<Self> {
        let mut classes = Vec::new();
        let (mut tn, mut ts) = (0u64, 0u64);
        for (class_id, label, n, s) in rows {
            if s > n {
                return Err(Error::invalid(format!(
                    "class {class_id}: {s} landslide pixels exceed {n} class pixels"
                )));
            }
            tn += n;
            ts += s;
            classes.push(FactorClassStats {
                class_id,
                label,
                n_pix_class: n,
                n_pix_slide: s,
                pct_class: 0.0,
                pct_slide: 0.0,
                fr: 0.0,
            });
        }
        Ok(FactorFrTable {
            factor: factor.into(),
            classes,
            total_class: tn,
            total_slide: ts,
        })
    }

    pub fn get(&self, class_id: i32) -> Option<&FactorClassStats> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }

    /// Replaces labels for class IDs present in `labels`.
    pub fn set_labels(&mut self, labels: &BTreeMap<i32, String>) {
        for c in &mut self.classes {
            if let Some(l) = labels.get(&c.class_id) {
                c.label = l.clone();
            }
        }
    }

    /// Labels from `breaks` (class `i` gets the i-th label).
    pub fn label_from_breaks(&mut self, breaks: &ClassBreaks) {
        let labels = breaks.labels();
        let ids: Vec<i32> = match breaks.method() {
            crate::classify::BreakMethod::Categorical => {
                breaks.uppers().iter().map(|&u| u as i32).collect()
            }
            _ => (1..=labels.len() as i32).collect(),
        };
        let map = ids.into_iter().zip(labels).collect();
        self.set_labels(&map);
    }

    /// `Σ FR_i · N_i / ΣN`; equals 1 for any table with landslides.
    pub fn weighted_fr_mean(&self) -> f64 {
        self.classes
            .iter()
            .map(|c| c.fr * c.n_pix_class as f64 / self.total_class as f64)
            .sum()
    }
}

pub const FR_CSV_HEADER: &str =
    "factor,class_label,class_id,n_pix_class,pct_class,n_pix_slide,pct_slide,fr";

/// FR tables as CSV with the fixed column order and a header row.
pub fn fr_tables_to_csv(tables: &[FactorFrTable]) -> String {
    let mut s = String::from(FR_CSV_HEADER);
    s.push('\n');
    for t in tables {
        for c in &t.classes {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                csv_field(&t.factor),
                csv_field(&c.label),
                c.class_id,
                c.n_pix_class,
                sig6(c.pct_class),
                c.n_pix_slide,
                sig6(c.pct_slide),
                sig6(c.fr)
            );
        }
    }
    s
}

pub fn write_fr_csv(tables: &[FactorFrTable], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, fr_tables_to_csv(tables)).map_err(|e| Error::io(path, e))
}

/// Per-class pixel counts of a factor against the inventory mask.
///
/// Nodata cells of the factor are excluded; inventory cells that are not 1
/// (including nodata) count as non-landslide.
pub fn class_stats(
    factor: impl Into<String>,
    classes: &ClassGrid,
    inventory: &MaskGrid,
) -> Result<FactorFrTable> {
    classes.check_aligned(inventory)?;
    classes.validate_classes()?;
    let cols = classes.n_cols();
    let counts: BTreeMap<i32, (u64, u64)> = classes
        .values()
        .par_chunks(cols)
        .zip(inventory.values().par_chunks(cols))
        .fold(BTreeMap::new, |mut acc: BTreeMap<i32, (u64, u64)>, (crow, irow)| {
            for (&c, &m) in crow.iter().zip(irow) {
                if classes.is_nodata(c) {
                    continue;
                }
                let e = acc.entry(c).or_default();
                e.0 += 1;
                e.1 += (m == 1 && !inventory.is_nodata(m)) as u64;
            }
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, (n, s)) in b {
                let e = a.entry(k).or_default();
                e.0 += n;
                e.1 += s;
            }
            a
        });
    if counts.is_empty() {
        return Err(Error::invalid("factor has no classified cells"));
    }
    FactorFrTable::from_counts(
        factor,
        counts
            .into_iter()
            .map(|(id, (n, s))| (id, id.to_string(), n, s)),
    )
}

/// Fills percentages and frequency ratios.
pub fn frequency_ratio(mut table: FactorFrTable) -> Result<FactorFrTable> {
    if table.total_slide == 0 {
        return Err(Error::EmptyInventory(format!(
            "factor `{}` has no landslide pixels in any class",
            table.factor
        )));
    }
    if table.total_class == 0 {
        return Err(Error::invalid(format!(
            "factor `{}` has no classified pixels",
            table.factor
        )));
    }
    let tn = table.total_class as f64;
    let ts = table.total_slide as f64;
    for c in &mut table.classes {
        let p_class = c.n_pix_class as f64 / tn;
        let p_slide = c.n_pix_slide as f64 / ts;
        c.pct_class = p_class * 100.0;
        c.pct_slide = p_slide * 100.0;
        c.fr = if c.n_pix_slide == 0 || c.n_pix_class == 0 {
            0.0
        } else {
            p_slide / p_class
        };
    }
    Ok(table)
}

/// Replaces every class ID by its frequency ratio.
pub fn fr_raster(classes: &ClassGrid, table: &FactorFrTable) -> Result<FloatGrid> {
    let lookup: HashMap<i32, f64> = table.classes.iter().map(|c| (c.class_id, c.fr)).collect();
    if let Some(missing) = classes.valid_values().find(|c| !lookup.contains_key(c)) {
        return Err(Error::UnknownClass(missing));
    }
    let values = map_index(classes.len(), |i| match classes.value_at(i) {
        Some(c) => lookup[&c],
        None => DEFAULT_NODATA,
    });
    Ok(classes.with_values(values, DEFAULT_NODATA))
}

/// Cell-wise sum of FR rasters; nodata wherever any input is nodata.
pub fn lsi(fr_rasters: &[&FloatGrid]) -> Result<FloatGrid> {
    let first = fr_rasters
        .first()
        .ok_or_else(|| Error::invalid("lsi needs at least one raster"))?;
    let refs: Vec<_> = fr_rasters.iter().map(|g| g.georef()).collect();
    align_check(&refs)?;
    let values = map_index(first.len(), |i| {
        let mut sum = 0.0;
        for g in fr_rasters {
            match g.value_at(i) {
                Some(v) => sum += v,
                None => return DEFAULT_NODATA,
            }
        }
        sum
    });
    Ok(first.with_values(values, DEFAULT_NODATA))
}

/// Adds one FR raster into a running LSI in place. Starting from the first
/// raster and accumulating the rest in order gives the same bits as [`lsi`].
pub fn lsi_accumulate(acc: &mut FloatGrid, fr: &FloatGrid) -> Result<()> {
    acc.check_aligned(fr)?;
    let nodata = acc.nodata();
    let cols = acc.n_cols();
    let is_nd = |v: f64| v.is_nan() || v == nodata;
    acc.values_mut()
        .par_chunks_mut(cols)
        .zip(fr.values().par_chunks(cols))
        .for_each(|(a_row, f_row)| {
            for (a, &f) in a_row.iter_mut().zip(f_row) {
                if is_nd(*a) || fr.is_nodata(f) {
                    *a = nodata;
                } else {
                    *a += f;
                }
            }
        });
    Ok(())
}

pub const ZONE_COUNT: usize = 5;
pub const ZONE_NAMES: [&str; ZONE_COUNT] = ["Very Low", "Low", "Moderate", "High", "Very High"];

/// LSI into zones 1..=5 (very low .. very high).
pub fn zonate(lsi: &FloatGrid, breaks: &ClassBreaks) -> Result<ClassGrid> {
    if breaks.class_count() != ZONE_COUNT {
        return Err(Error::invalid(format!(
            "zonation needs exactly {ZONE_COUNT} classes, got {}",
            breaks.class_count()
        )));
    }
    reclassify(lsi, breaks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneArea {
    pub zone: i32,
    pub name: &'static str,
    pub pixels: u64,
    pub area_km2: f64,
    pub area_pct: f64,
}

/// Per-zone pixel count, area (km², map units taken as metres) and share of
/// the zoned area.
pub fn area_report(zones: &ClassGrid) -> Vec<ZoneArea> {
    let mut counts = [0u64; ZONE_COUNT];
    for z in zones.valid_values() {
        if (1..=ZONE_COUNT as i32).contains(&z) {
            counts[(z - 1) as usize] += 1;
        }
    }
    zone_areas_from_counts(&counts, zones.cell_size())
}

pub fn zone_areas_from_counts(counts: &[u64; ZONE_COUNT], cell_size: f64) -> Vec<ZoneArea> {
    let total: u64 = counts.iter().sum();
    let cell_km2 = cell_size * cell_size / 1e6;
    counts
        .iter()
        .enumerate()
        .map(|(i, &n)| ZoneArea {
            zone: i as i32 + 1,
            name: ZONE_NAMES[i],
            pixels: n,
            area_km2: n as f64 * cell_km2,
            area_pct: if total == 0 {
                0.0
            } else {
                n as f64 / total as f64 * 100.0
            },
        })
        .collect()
}

pub fn zone_areas_to_csv(rows: &[ZoneArea]) -> String {
    let mut s = String::from("zone,name,pixels,area_km2,area_pct\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.zone,
            r.name,
            r.pixels,
            sig6(r.area_km2),
            sig6(r.area_pct)
        );
    }
    s
}
