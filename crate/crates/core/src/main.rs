use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

use lsmap::classify::{equal_interval_breaks, jenks_breaks_for_grid, reclassify, BreakMethod, ClassBreaks};
use lsmap::fr::{
    area_report, class_stats, fr_raster, fr_tables_to_csv, frequency_ratio, lsi, zonate, zone_areas_to_csv,
    ZONE_COUNT,
};
use lsmap::hydro::{drainage_density, euclidean_distance, extract_streams};
use lsmap::inventory::{rasterize_inventory, InventoryPoints};
use lsmap::pipeline::{run_pipeline, PipelineConfig};
use lsmap::raster::{read_grid, render_png, write_grid, ColorRamp};
use lsmap::terrain::{
    aspect_degrees, curvature, cut_fill, fill_depressions, flow_accumulation, flow_direction_d8, ndvi,
    slope_degrees, spi, twi,
};
use lsmap::validation::{auc, split_inventory, success_rate_curve, AucBand};
use lsmap::{Error, ErrorCategory, FloatGrid, GeoRef, MaskGrid, Result};

#[derive(Parser)]
#[command(name = "lsmap", version, about = "Frequency-ratio landslide susceptibility mapping")]
struct Cli {
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, global = true, env = "LSMAP_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DeriveOp {
    Slope,
    Aspect,
    Curvature,
    Fill,
    Flowdir,
    Flowacc,
    Streams,
    Spi,
    Twi,
    Ndvi,
    Cutfill,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Jenks,
    EqualInterval,
    Manual,
    Categorical,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a terrain, hydrological or spectral raster.
    Derive {
        #[arg(long, value_enum)]
        op: DeriveOp,
        #[arg(long)]
        dem: Option<PathBuf>,
        /// Older DEM for `cutfill`.
        #[arg(long)]
        dem_old: Option<PathBuf>,
        #[arg(long)]
        nir: Option<PathBuf>,
        #[arg(long)]
        red: Option<PathBuf>,
        /// Minimum upstream cell count for `streams`.
        #[arg(long, default_value_t = 100.0)]
        threshold: f64,
        /// No-change tolerance for `cutfill`, in elevation units.
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Euclidean distance to the 1-cells of a mask raster.
    Distance {
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Drainage density in a square window around each cell.
    Density {
        #[arg(long)]
        streams: PathBuf,
        /// Window half-width in map units.
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reclassify a raster into class IDs.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "jenks")]
        method: Method,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Comma-separated class upper bounds for `manual`.
        #[arg(long, value_delimiter = ',')]
        uppers: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the class table as CSV.
        #[arg(long)]
        breaks_out: Option<PathBuf>,
    },
    /// Frequency-ratio table of a class raster against an inventory.
    Fr {
        #[arg(long)]
        classes: PathBuf,
        /// Points CSV (`x,y[,id]`) or a mask raster.
        #[arg(long)]
        inventory: PathBuf,
        /// Factor name written to the table.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-cell FR raster.
        #[arg(long)]
        fr_raster: Option<PathBuf>,
    },
    /// Sum FR rasters into the susceptibility index.
    Lsi {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split LSI into five susceptibility zones.
    Zonate {
        #[arg(long)]
        lsi: PathBuf,
        #[arg(long, value_enum, default_value = "jenks")]
        method: Method,
        #[arg(long, value_delimiter = ',')]
        uppers: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Success/prediction-rate curve and AUC of an LSI raster.
    Validate {
        #[arg(long)]
        lsi: PathBuf,
        /// Points CSV (`x,y[,id]`) or a mask raster.
        #[arg(long)]
        inventory: PathBuf,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        /// Curve CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a raster to PNG.
    Render {
        #[arg(long)]
        input: PathBuf,
        /// susceptibility | terrain | grayscale
        #[arg(long, default_value = "susceptibility")]
        ramp: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-zone pixel count, area and share of a zone raster.
    Report {
        #[arg(long)]
        zones: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded train/test split of a points CSV.
    Split {
        #[arg(long)]
        inventory: PathBuf,
        #[arg(long, default_value_t = 0.7)]
        ratio: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
    /// Write the bundled synthetic catchment dataset and its config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = lsmap::synthetic::SIZE)]
        size: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Io => 3,
        ErrorCategory::Input => 4,
        ErrorCategory::Validation => 5,
    }
}

/// Missing operation-specific flags are usage errors, reported the way clap
/// reports its own (exit code 2).
fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> &'a Path {
    p.as_deref().unwrap_or_else(|| {
        Cli::command()
            .error(
                clap::error::ErrorKind::MissingRequiredArgument,
                format!("--{flag} is required for this operation"),
            )
            .exit()
    })
}

fn read_mask(path: &Path) -> Result<MaskGrid> {
    let m = read_grid(path)?.to_categorical()?;
    m.validate_mask()?;
    Ok(m)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Inventory as a mask on `template`, from a points CSV or a mask raster.
fn inventory_mask(path: &Path, template: &GeoRef) -> Result<MaskGrid> {
    if is_csv(path) {
        Ok(rasterize_inventory(&InventoryPoints::read_csv(path)?, template)?.mask)
    } else {
        let m = read_mask(path)?;
        m.georef().check_aligned(template)?;
        Ok(m)
    }
}

fn breaks_for(grid: &FloatGrid, method: Method, k: usize, uppers: &[f64], seed: u64) -> Result<ClassBreaks> {
    let (lo, hi) = grid
        .min_max()
        .ok_or_else(|| Error::InvalidArgument("raster has no valid cells".into()))?;
    match method {
        Method::Jenks => jenks_breaks_for_grid(grid, k, seed),
        Method::EqualInterval => Ok(equal_interval_breaks(lo, hi, k)?.with_lower(lo)),
        Method::Manual => Ok(ClassBreaks::manual(uppers.to_vec())?.with_lower(lo)),
        Method::Categorical => ClassBreaks::categorical(grid.to_categorical()?.valid_values().collect()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn derive(op: DeriveOp, dem: Option<&Path>, a: &DeriveArgs) -> Result<()> {
    let dem = || -> Result<FloatGrid> {
        read_grid(dem.unwrap_or_else(|| require(&None, "dem")))
    };
    match op {
        DeriveOp::Slope => write_grid(&slope_degrees(&dem()?)?, &a.out),
        DeriveOp::Aspect => write_grid(&aspect_degrees(&dem()?)?, &a.out),
        DeriveOp::Curvature => write_grid(&curvature(&dem()?)?, &a.out),
        DeriveOp::Fill => write_grid(&fill_depressions(&dem()?), &a.out),
        DeriveOp::Flowdir => write_grid(&flow_direction_d8(&fill_depressions(&dem()?))?, &a.out),
        DeriveOp::Flowacc | DeriveOp::Streams | DeriveOp::Spi | DeriveOp::Twi => {
            let d = dem()?;
            let acc = flow_accumulation(&flow_direction_d8(&fill_depressions(&d))?)?;
            match op {
                DeriveOp::Flowacc => write_grid(&acc, &a.out),
                DeriveOp::Streams => write_grid(&extract_streams(&acc, a.threshold)?, &a.out),
                DeriveOp::Spi => write_grid(&spi(&acc, &slope_degrees(&d)?)?, &a.out),
                _ => write_grid(&twi(&acc, &slope_degrees(&d)?)?, &a.out),
            }
        }
        DeriveOp::Ndvi => {
            let nir = read_grid(require(&a.nir, "nir"))?;
            let red = read_grid(require(&a.red, "red"))?;
            write_grid(&ndvi(&nir, &red)?, &a.out)
        }
        DeriveOp::Cutfill => {
            let old = read_grid(require(&a.dem_old, "dem-old"))?;
            let cf = cut_fill(&old, &dem()?, a.tolerance)?;
            println!("cut_volume={} fill_volume={}", cf.cut_volume, cf.fill_volume);
            write_grid(&cf.classes, &a.out)
        }
    }
}

struct DeriveArgs {
    dem_old: Option<PathBuf>,
    nir: Option<PathBuf>,
    red: Option<PathBuf>,
    threshold: f64,
    tolerance: f64,
    out: PathBuf,
}

fn execute(command: Command, workers: Option<usize>) -> Result<()> {
    match command {
        Command::Run { config, out } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let s = run_pipeline(&cfg, workers)?;
            println!(
                "success AUC {:.4} ({}), prediction AUC {:.4} ({}); outputs in {}",
                s.success_auc,
                AucBand::of(s.success_auc),
                s.prediction_auc,
                AucBand::of(s.prediction_auc),
                s.output_dir.display()
            );
        }
        Command::Derive { op, dem, dem_old, nir, red, threshold, tolerance, out } => {
            let args = DeriveArgs { dem_old, nir, red, threshold, tolerance, out };
            derive(op, dem.as_deref(), &args)?;
        }
        Command::Distance { mask, out } => write_grid(&euclidean_distance(&read_mask(&mask)?)?, out)?,
        Command::Density { streams, radius, out } => {
            write_grid(&drainage_density(&read_mask(&streams)?, radius)?, out)?
        }
        Command::Classify { input, method, k, uppers, seed, out, breaks_out } => {
            let g = read_grid(&input)?;
            let breaks = breaks_for(&g, method, k, &uppers, seed)?;
            write_grid(&reclassify(&g, &breaks)?, out)?;
            match breaks_out {
                Some(p) => write_text(&p, &breaks.to_csv())?,
                None => print!("{}", breaks.to_csv()),
            }
        }
        Command::Fr { classes, inventory, name, out, fr_raster: fr_out } => {
            let cls = read_grid(&classes)?.to_categorical()?;
            let mask = inventory_mask(&inventory, cls.georef())?;
            let name = name.unwrap_or_else(|| {
                classes.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
            });
            let table = frequency_ratio(class_stats(name, &cls, &mask)?)?;
            write_text(&out, &fr_tables_to_csv(std::slice::from_ref(&table)))?;
            if let Some(p) = fr_out {
                write_grid(&fr_raster(&cls, &table)?, p)?;
            }
        }
        Command::Lsi { inputs, out } => {
            let grids = inputs.iter().map(read_grid).collect::<Result<Vec<_>>>()?;
            write_grid(&lsi(&grids.iter().collect::<Vec<_>>())?, out)?;
        }
        Command::Zonate { lsi, method, uppers, seed, out } => {
            let g = read_grid(&lsi)?;
            let breaks = breaks_for(&g, method, ZONE_COUNT, &uppers, seed)?;
            if breaks.method() == BreakMethod::Categorical {
                return Err(Error::InvalidArgument("zonation cannot be categorical".into()));
            }
            let zones = zonate(&g, &breaks)?;
            write_grid(&zones, out)?;
            print!("{}", breaks.to_csv());
        }
        Command::Validate { lsi, inventory, bins, out } => {
            let g = read_grid(&lsi)?;
            let mask = inventory_mask(&inventory, g.georef())?;
            let curve = success_rate_curve(&g, &mask, bins)?;
            let a = auc(&curve)?;
            match out {
                Some(p) => curve.write_csv(p)?,
                None => print!("{}", curve.to_csv()),
            }
            println!("AUC {a:.6} ({})", AucBand::of(a));
        }
        Command::Render { input, ramp, out } => {
            let ramp = ColorRamp::by_name(&ramp)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown ramp `{ramp}`")))?;
            render_png(&read_grid(&input)?, &ramp, None, out)?;
        }
        Command::Report { zones, out } => {
            let z = read_grid(&zones)?.to_categorical()?;
            let csv = zone_areas_to_csv(&area_report(&z));
            match out {
                Some(p) => write_text(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Split { inventory, ratio, seed, train_out, test_out } => {
            let s = split_inventory(&InventoryPoints::read_csv(&inventory)?, ratio, seed)?;
            s.train.write_csv(&train_out)?;
            s.test.write_csv(&test_out)?;
            println!("train {} test {}", s.train.len(), s.test.len());
        }
        Command::Synth { out, size } => lsmap::synthetic::write_dataset(&out, size)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(0) = cli.workers {
        eprintln!("error: --workers must be >= 1");
        return ExitCode::from(2);
    }
    let result = match cli.workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            Ok(()) => execute(cli.command, Some(n)),
            Err(e) => Err(Error::InvalidArgument(format!("thread pool: {e}"))),
        },
        None => execute(cli.command, None),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
