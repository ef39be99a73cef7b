//! Config-driven end-to-end run: derive factors, classify, compute frequency
//! ratios on the training inventory, sum into LSI, zonate, validate and
//! write every artefact to the output directory.

mod config;

pub use config::{
    ClassificationSpec, DerivedOp, FactorKind, FactorSpec, Inputs, InventorySource, PipelineConfig,
    ValidationSpec, ZonationSpec,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::classify::{equal_interval_breaks, jenks_breaks_for_grid, reclassify, BreakMethod, ClassBreaks};
use crate::error::{Error, Result};
use crate::fr::{
    area_report, class_stats, fr_raster, fr_tables_to_csv, frequency_ratio, lsi_accumulate, zonate,
    zone_areas_to_csv, FactorFrTable, ZoneArea,
};
use crate::hydro::{drainage_density, euclidean_distance, extract_streams};
use crate::inventory::{rasterize_inventory, InventoryPoints};
use crate::raster::{read_grid, render_png, write_grid, ClassGrid, ColorRamp, FloatGrid, MaskGrid};
use crate::report::sig6;
use crate::terrain::{
    aspect_degrees, curvature, cut_fill, fill_depressions, flow_accumulation, flow_direction_d8, ndvi,
    slope_degrees, spi, twi, CutFillClass,
};
use crate::validation::{auc, split_inventory, success_rate_curve, AucBand, RateCurve};

/// Name of the marker file left in the output directory by a failed run.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// A derived raster, continuous or categorical.
#[derive(Debug, Clone, PartialEq)]
pub enum Derived {
    Continuous(FloatGrid),
    Categorical(ClassGrid),
}

/// Lazily computes and caches rasters derived from a DEM and optional
/// auxiliary inputs.
#[derive(Debug, Clone)]
pub struct Derivations {
    dem: FloatGrid,
    dem_old: Option<FloatGrid>,
    roads: Option<MaskGrid>,
    nir: Option<FloatGrid>,
    red: Option<FloatGrid>,
    stream_threshold: f64,
    density_radius: Option<f64>,
    cut_fill_tolerance: f64,
    slope: Option<FloatGrid>,
    acc: Option<FloatGrid>,
    streams: Option<MaskGrid>,
}

impl Derivations {
    pub fn new(dem: FloatGrid) -> Self {
        Derivations {
            dem,
            dem_old: None,
            roads: None,
            nir: None,
            red: None,
            stream_threshold: 100.0,
            density_radius: None,
            cut_fill_tolerance: 0.0,
            slope: None,
            acc: None,
            streams: None,
        }
    }

    pub fn dem(&self) -> &FloatGrid {
        &self.dem
    }

    pub fn with_dem_old(mut self, g: FloatGrid) -> Result<Self> {
        self.dem.check_aligned(&g)?;
        self.dem_old = Some(g);
        Ok(self)
    }

    pub fn with_roads(mut self, g: MaskGrid) -> Result<Self> {
        self.dem.check_aligned(&g)?;
        g.validate_mask()?;
        self.roads = Some(g);
        Ok(self)
    }

    pub fn with_bands(mut self, nir: FloatGrid, red: FloatGrid) -> Result<Self> {
        self.dem.check_aligned(&nir)?;
        self.dem.check_aligned(&red)?;
        self.nir = Some(nir);
        self.red = Some(red);
        Ok(self)
    }

    pub fn with_stream_threshold(mut self, t: f64) -> Self {
        self.stream_threshold = t;
        self
    }

    pub fn with_density_radius(mut self, r: Option<f64>) -> Self {
        self.density_radius = r;
        self
    }

    pub fn with_cut_fill_tolerance(mut self, tau: f64) -> Self {
        self.cut_fill_tolerance = tau;
        self
    }

    /// Density window half-width actually used.
    pub fn density_radius(&self) -> f64 {
        self.density_radius.unwrap_or(5.0 * self.dem.cell_size())
    }

    pub fn slope(&mut self) -> Result<&FloatGrid> {
        if self.slope.is_none() {
            self.slope = Some(slope_degrees(&self.dem)?);
        }
        Ok(self.slope.as_ref().unwrap())
    }

    /// Upstream cell count over the depression-filled DEM.
    pub fn accumulation(&mut self) -> Result<&FloatGrid> {
        if self.acc.is_none() {
            let filled = fill_depressions(&self.dem);
            let fdir = flow_direction_d8(&filled)?;
            self.acc = Some(flow_accumulation(&fdir)?);
        }
        Ok(self.acc.as_ref().unwrap())
    }

    pub fn streams(&mut self) -> Result<&MaskGrid> {
        if self.streams.is_none() {
            let t = self.stream_threshold;
            let s = extract_streams(self.accumulation()?, t)?;
            if !s.values().contains(&1) {
                return Err(Error::invalid(format!(
                    "stream threshold {t} leaves no stream cells; lower `stream_threshold`"
                )));
            }
            self.streams = Some(s);
        }
        Ok(self.streams.as_ref().unwrap())
    }

    pub fn compute(&mut self, op: DerivedOp) -> Result<Derived> {
        let missing = |what: &str| Error::invalid(format!("derived `{op}` requires {what}"));
        Ok(Derived::Continuous(match op {
            DerivedOp::Elevation => self.dem.clone(),
            DerivedOp::Slope => self.slope()?.clone(),
            DerivedOp::Aspect => aspect_degrees(&self.dem)?,
            DerivedOp::Curvature => curvature(&self.dem)?,
            DerivedOp::Spi | DerivedOp::Twi => {
                let slope = self.slope()?.clone();
                let acc = self.accumulation()?;
                if op == DerivedOp::Spi {
                    spi(acc, &slope)?
                } else {
                    twi(acc, &slope)?
                }
            }
            DerivedOp::DrainageDistance => euclidean_distance(self.streams()?)?,
            DerivedOp::DrainageDensity => {
                let r = self.density_radius();
                drainage_density(self.streams()?, r)?
            }
            DerivedOp::RoadDistance => {
                euclidean_distance(self.roads.as_ref().ok_or_else(|| missing("a roads raster"))?)?
            }
            DerivedOp::Ndvi => match (&self.nir, &self.red) {
                (Some(n), Some(r)) => ndvi(n, r)?,
                _ => return Err(missing("NIR and red bands")),
            },
            DerivedOp::CutFill => {
                let old = self.dem_old.as_ref().ok_or_else(|| missing("an older DEM"))?;
                let cf = cut_fill(old, &self.dem, self.cut_fill_tolerance)?;
                log::info!(
                    "cut-fill volumes: cut {} m3, fill {} m3",
                    sig6(cf.cut_volume),
                    sig6(cf.fill_volume)
                );
                return Ok(Derived::Categorical(cf.classes));
            }
        }))
    }
}

/// Results of a successful run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub fr_tables: Vec<FactorFrTable>,
    pub zone_breaks: ClassBreaks,
    pub zone_areas: Vec<ZoneArea>,
    pub success_curve: RateCurve,
    pub prediction_curve: RateCurve,
    pub success_auc: f64,
    pub prediction_auc: f64,
    pub train_points: usize,
    pub test_points: usize,
}

fn stage<T>(name: impl Into<String>, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let name = name.into();
    let start = std::time::Instant::now();
    let out = f().map_err(|e| Error::Stage {
        stage: name.clone(),
        source: Box::new(e),
    });
    log::info!("stage `{name}` took {:.3} s", start.elapsed().as_secs_f64());
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_mask(path: &Path) -> Result<MaskGrid> {
    let m = read_grid(path)?.to_categorical()?;
    m.validate_mask()?;
    Ok(m)
}

/// Runs the whole pipeline on a pool of `workers` threads (the global rayon
/// pool when `None`). Outputs are identical for any worker count.
///
/// On failure an `INCOMPLETE` file naming the failed stage is left in the
/// output directory.
pub fn run_pipeline(cfg: &PipelineConfig, workers: Option<usize>) -> Result<RunSummary> {
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let marker = out.join(INCOMPLETE_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    let result = match workers {
        Some(0) => Err(Error::invalid("workers must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| run_inner(cfg))),
        None => run_inner(cfg),
    };
    if let Err(e) = &result {
        let _ = fs::write(&marker, format!("run failed; outputs in this directory are partial\n{e}\n"));
    }
    result
}

fn run_inner(cfg: &PipelineConfig) -> Result<RunSummary> {
    let out = &cfg.output_dir;
    for sub in ["factors", "classes"] {
        let d = out.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }

    let mut deriv = stage("load inputs", || {
        let dem = read_grid(&cfg.dem)?;
        let mut d = Derivations::new(dem)
            .with_stream_threshold(cfg.stream_threshold)
            .with_density_radius(cfg.density_radius)
            .with_cut_fill_tolerance(cfg.cut_fill_tolerance);
        if let Some(p) = &cfg.dem_old {
            d = d.with_dem_old(read_grid(p)?)?;
        }
        if let Some(p) = &cfg.inputs.roads {
            d = d.with_roads(read_mask(p)?)?;
        }
        if let (Some(n), Some(r)) = (&cfg.inputs.nir, &cfg.inputs.red) {
            d = d.with_bands(read_grid(n)?, read_grid(r)?)?;
        }
        Ok(d)
    })?;
    let georef = *deriv.dem().georef();

    let (split, train_mask, test_mask) = stage("inventory", || {
        let points = match (&cfg.inventory.points, &cfg.inventory.mask) {
            (Some(p), _) => InventoryPoints::read_csv(p)?,
            (None, Some(p)) => {
                let m = read_mask(p)?;
                m.georef().check_aligned(&georef)?;
                InventoryPoints::from_mask(&m)
            }
            (None, None) => return Err(Error::Config("inventory source missing".into())),
        };
        let v = &cfg.validation;
        let split = split_inventory(&points, v.train_ratio, v.seed)?;
        split.train.write_csv(out.join("inventory_train.csv"))?;
        split.test.write_csv(out.join("inventory_test.csv"))?;
        let train = rasterize_inventory(&split.train, &georef)?;
        let test = rasterize_inventory(&split.test, &georef)?;
        Ok((split, train.mask, test.mask))
    })?;

    let mut tables = Vec::with_capacity(cfg.factors.len());
    let mut lsi_sum: Option<FloatGrid> = None;
    for f in &cfg.factors {
        let name = &f.name;
        let raster = stage(format!("derive {name}"), || match (f.derived, &f.file) {
            (Some(op), _) => deriv.compute(op),
            (None, Some(p)) => {
                let g = read_grid(p)?;
                g.check_aligned(deriv.dem())?;
                Ok(match f.kind() {
                    FactorKind::Continuous => Derived::Continuous(g),
                    FactorKind::Categorical => Derived::Categorical(g.to_categorical()?),
                })
            }
            (None, None) => Err(Error::Config(format!("factor `{name}` has no source"))),
        })?;

        let (classes, breaks) = stage(format!("classify {name}"), || {
            let path = out.join("factors").join(format!("{name}.asc"));
            let c = f.classification();
            let (classes, breaks) = match raster {
                Derived::Continuous(g) => {
                    write_grid(&g, &path)?;
                    let breaks = factor_breaks(&g, &c, cfg.jenks_seed)?;
                    (reclassify(&g, &breaks)?, breaks)
                }
                Derived::Categorical(g) => {
                    write_grid(&g, &path)?;
                    if c.method != BreakMethod::Categorical {
                        return Err(Error::Config(format!(
                            "categorical factor `{name}` needs the categorical method"
                        )));
                    }
                    let ids: Vec<i32> = g.valid_values().collect();
                    let breaks = ClassBreaks::categorical(ids)?;
                    (reclassify(&g, &breaks)?, breaks)
                }
            };
            write_grid(&classes, out.join("classes").join(format!("{name}.asc")))?;
            write_text(&out.join("classes").join(format!("{name}_breaks.csv")), &breaks.to_csv())?;
            Ok((classes, breaks))
        })?;

        let (table, grid) = stage(format!("frequency ratio {name}"), || {
            let mut table = frequency_ratio(class_stats(name.clone(), &classes, &train_mask)?)?;
            table.label_from_breaks(&breaks);
            if f.derived == Some(DerivedOp::CutFill) {
                let defaults: BTreeMap<i32, String> = [CutFillClass::Unchanged, CutFillClass::NetGain, CutFillClass::NetLoss]
                    .into_iter()
                    .map(|c| (c as i32, c.label().to_string()))
                    .collect();
                table.set_labels(&defaults);
            }
            table.set_labels(&f.classification().parsed_labels()?);
            let grid = fr_raster(&classes, &table)?;
            Ok((table, grid))
        })?;
        tables.push(table);
        match &mut lsi_sum {
            None => lsi_sum = Some(grid),
            Some(acc) => stage("lsi", || lsi_accumulate(acc, &grid))?,
        }
    }
    drop(deriv);
    stage("write frequency ratios", || {
        write_text(&out.join("fr_tables.csv"), &fr_tables_to_csv(&tables))
    })?;

    let lsi_grid = stage("lsi", || {
        let g = lsi_sum.take().ok_or_else(|| Error::Config("no factors".into()))?;
        write_grid(&g, out.join("lsi.asc"))?;
        Ok(g)
    })?;

    let (zone_breaks, zones, zone_areas) = stage("zonation", || {
        let z = &cfg.zonation;
        let breaks = match z.method {
            BreakMethod::Manual => ClassBreaks::manual(z.uppers.clone().unwrap_or_default())?,
            BreakMethod::EqualInterval => {
                let (lo, hi) = lsi_grid.min_max().ok_or_else(|| Error::invalid("LSI has no valid cells"))?;
                equal_interval_breaks(lo, hi, crate::fr::ZONE_COUNT)?
            }
            BreakMethod::Jenks => jenks_breaks_for_grid(&lsi_grid, crate::fr::ZONE_COUNT, cfg.jenks_seed)?,
            BreakMethod::Categorical => return Err(Error::Config("zonation cannot be categorical".into())),
        };
        let zones = zonate(&lsi_grid, &breaks)?;
        let areas = area_report(&zones);
        write_grid(&zones, out.join("zones.asc"))?;
        write_text(&out.join("zone_breaks.csv"), &breaks.to_csv())?;
        write_text(&out.join("zone_areas.csv"), &zone_areas_to_csv(&areas))?;
        Ok((breaks, zones, areas))
    })?;

    let (success_curve, prediction_curve, success_auc, prediction_auc) = stage("validation", || {
        let bins = cfg.validation.bins;
        let sc = success_rate_curve(&lsi_grid, &train_mask, bins)?;
        let pc = success_rate_curve(&lsi_grid, &test_mask, bins)?;
        sc.write_csv(out.join("success_rate.csv"))?;
        pc.write_csv(out.join("prediction_rate.csv"))?;
        let (sa, pa) = (auc(&sc)?, auc(&pc)?);
        Ok((sc, pc, sa, pa))
    })?;

    if cfg.render {
        stage("render", || {
            render_png(&lsi_grid, &ColorRamp::susceptibility(), None, out.join("lsi.png"))?;
            render_png(&zones, &ColorRamp::susceptibility(), None, out.join("zones.png"))
        })?;
    }

    let summary = RunSummary {
        output_dir: out.clone(),
        fr_tables: tables,
        zone_breaks,
        zone_areas,
        success_curve,
        prediction_curve,
        success_auc,
        prediction_auc,
        train_points: split.train.len(),
        test_points: split.test.len(),
    };
    stage("report", || {
        write_text(&out.join("report.txt"), &format_report(cfg, &lsi_grid, &summary))
    })?;
    Ok(summary)
}

fn factor_breaks(g: &FloatGrid, c: &ClassificationSpec, seed: u64) -> Result<ClassBreaks> {
    let k = c.k.unwrap_or(5);
    match c.method {
        BreakMethod::Jenks => jenks_breaks_for_grid(g, k, seed),
        BreakMethod::EqualInterval => {
            let (lo, hi) = g.min_max().ok_or_else(|| Error::invalid("factor has no valid cells"))?;
            Ok(equal_interval_breaks(lo, hi, k)?.with_lower(lo))
        }
        BreakMethod::Manual => {
            let b = ClassBreaks::manual(c.uppers.clone().unwrap_or_default())?;
            Ok(match g.min_max() {
                Some((lo, _)) => b.with_lower(lo),
                None => b,
            })
        }
        BreakMethod::Categorical => Err(Error::Config(
            "continuous factors cannot use the categorical method".into(),
        )),
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

/// Plain-text run report. Contains no paths beyond file names and no
/// timings, so identical inputs give identical reports.
pub fn format_report(cfg: &PipelineConfig, lsi_grid: &FloatGrid, s: &RunSummary) -> String {
    let mut r = String::new();
    let g = lsi_grid.georef();
    let _ = writeln!(r, "Landslide susceptibility (frequency ratio) run report");
    let _ = writeln!(r);
    let _ = writeln!(r, "DEM: {}", file_name(&cfg.dem));
    let _ = writeln!(r, "Grid: {} rows x {} cols, cell size {}", g.n_rows, g.n_cols, sig6(g.cell_size));
    let _ = writeln!(r, "LSI cells with data: {}", lsi_grid.count_valid());
    let _ = writeln!(
        r,
        "Inventory: {} training / {} test points (ratio {}, seed {})",
        s.train_points,
        s.test_points,
        sig6(cfg.validation.train_ratio),
        cfg.validation.seed
    );
    let _ = writeln!(r);
    let _ = writeln!(r, "Factors ({}):", s.fr_tables.len());
    for t in &s.fr_tables {
        let max = t.classes.iter().max_by(|a, b| a.fr.total_cmp(&b.fr).then(b.class_id.cmp(&a.class_id)));
        if let Some(m) = max {
            let _ = writeln!(
                r,
                "  {:<20} {} classes, highest FR {} in class {} ({})",
                t.factor,
                t.classes.len(),
                sig6(m.fr),
                m.class_id,
                m.label
            );
        }
    }
    let _ = writeln!(r);
    let _ = writeln!(r, "Zonation ({}):", s.zone_breaks.method().as_str());
    let labels = s.zone_breaks.labels();
    for (z, label) in s.zone_areas.iter().zip(labels) {
        let _ = writeln!(
            r,
            "  {:<10} LSI {:<24} {:>9} px {:>12} km2 {:>8}%",
            z.name,
            label,
            z.pixels,
            sig6(z.area_km2),
            format!("{:.2}", z.area_pct)
        );
    }
    let _ = writeln!(r);
    let _ = writeln!(
        r,
        "Success-rate AUC (training):   {:.4} ({})",
        s.success_auc,
        AucBand::of(s.success_auc)
    );
    let _ = writeln!(
        r,
        "Prediction-rate AUC (test):    {:.4} ({})",
        s.prediction_auc,
        AucBand::of(s.prediction_auc)
    );
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn config_in(dir: &Path) -> PipelineConfig {
        synthetic::write_dataset(dir, 32).unwrap();
        let mut cfg = PipelineConfig::load(dir.join("config.toml")).unwrap();
        cfg.stream_threshold = 10.0;
        cfg.render = false;
        cfg
    }

    #[test]
    fn small_synthetic_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config_in(dir.path());
        let s = run_pipeline(&cfg, Some(2)).unwrap();
        assert_eq!(s.fr_tables.len(), 13);
        assert!(s.success_auc > 0.5 && s.success_auc <= 1.0);
        for t in &s.fr_tables {
            assert!((t.weighted_fr_mean() - 1.0).abs() < 1e-9, "{}", t.factor);
        }
        for f in ["lsi.asc", "zones.asc", "fr_tables.csv", "zone_areas.csv", "report.txt", "success_rate.csv"] {
            assert!(cfg.output_dir.join(f).is_file(), "{f}");
        }
        assert!(!cfg.output_dir.join(INCOMPLETE_MARKER).exists());
    }

    #[test]
    fn failure_leaves_marker() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config_in(dir.path());
        cfg.stream_threshold = 1e9;
        let e = run_pipeline(&cfg, None).unwrap_err();
        assert!(matches!(e, Error::Stage { .. }));
        let marker = fs::read_to_string(cfg.output_dir.join(INCOMPLETE_MARKER)).unwrap();
        assert!(marker.contains("stream threshold"), "{marker}");
    }
}
