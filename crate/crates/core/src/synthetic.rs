//! Deterministic synthetic catchment used by the bundled example and the
//! end-to-end tests.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::inventory::{InventoryPoint, InventoryPoints};
use crate::raster::{write_ascii_grid, ClassGrid, FloatGrid, GeoRef, Grid, DEFAULT_CLASS_NODATA, DEFAULT_NODATA};
use crate::terrain::slope_degrees;

pub const SIZE: usize = 64;
pub const CELL_SIZE: f64 = 30.0;
pub const X_ORIGIN: f64 = 500_000.0;
pub const Y_ORIGIN: f64 = 2_400_000.0;
const SEED: u64 = 20_240_601;

pub struct Catchment {
    pub dem: FloatGrid,
    pub dem_old: FloatGrid,
    pub roads: ClassGrid,
    pub nir: FloatGrid,
    pub red: FloatGrid,
    pub rainfall: FloatGrid,
    pub land_use: ClassGrid,
    pub inventory: InventoryPoints,
}

fn georef(n: usize) -> GeoRef {
    GeoRef::new(X_ORIGIN, Y_ORIGIN, CELL_SIZE, n, n).expect("static georef")
}

/// Rounds to `places` decimals, landing on the double nearest the decimal
/// so the written files stay short.
fn round_to(v: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    (v * scale).round() / scale
}

/// Builds an `n × n` catchment: a Gaussian massif tilted toward the
/// south-west outlet, with landslides planted on the steepest flanks.
pub fn catchment(n: usize) -> Result<Catchment> {
    if n < 8 {
        return Err(Error::invalid("synthetic catchment needs n >= 8"));
    }
    let g = georef(n);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mid = n as f64 / 2.0;
    let scale = n as f64 / 64.0;

    let dem = Grid::from_fn(g, DEFAULT_NODATA, |r, c| {
        let (x, y) = (c as f64 - mid, mid - r as f64);
        let d2 = (x * x + y * y) / (14.0 * scale).powi(2);
        let massif = 700.0 * (-d2).exp();
        let ridges = 25.0 * (c as f64 / (6.0 * scale)).sin() * (r as f64 / (9.0 * scale)).cos();
        let tilt = 3.0 * (c as f64 + (n - 1 - r) as f64) / scale;
        round_to(120.0 + massif + ridges + tilt, 2)
    })?;

    let dem_old = Grid::from_fn(g, DEFAULT_NODATA, |r, c| {
        let z = dem.get(r, c);
        let quarry = (r as f64 - 0.7 * n as f64).abs() < 4.0 * scale && (c as f64 - 0.3 * n as f64).abs() < 5.0 * scale;
        let embankment = (r as f64 - 0.25 * n as f64).abs() < 2.0 * scale;
        if quarry {
            round_to(z + 6.0, 2)
        } else if embankment {
            round_to(z - 3.0, 2)
        } else if (r * 7 + c * 3) % 5 == 0 {
            round_to(z + 0.4, 2)
        } else {
            z
        }
    })?;

    let road_row = (0.45 * n as f64) as usize;
    let roads = Grid::from_fn(g, DEFAULT_CLASS_NODATA, |r, c| {
        let diagonal = (r as isize - (n - 1 - c) as isize).abs() <= 0 && c < n * 3 / 4;
        (r == road_row || diagonal) as i32
    })?;

    let slope = slope_degrees(&dem)?;
    let (s_lo, s_hi) = slope.min_max().unwrap_or((0.0, 1.0));
    let veg = |r: usize, c: usize| -> f64 {
        let s = (slope.get(r, c) - s_lo) / (s_hi - s_lo).max(1e-9);
        (0.85 - 0.6 * s + 0.1 * ((r + c) as f64 / 5.0).sin()).clamp(0.05, 0.95)
    };
    let nir = Grid::from_fn(g, DEFAULT_NODATA, |r, c| round_to(0.25 + 0.35 * veg(r, c), 4))?;
    let red = Grid::from_fn(g, DEFAULT_NODATA, |r, c| round_to(0.18 - 0.12 * veg(r, c), 4))?;

    let rainfall = Grid::from_fn(g, DEFAULT_NODATA, |r, c| {
        let z = dem.get(r, c);
        round_to(1500.0 + 600.0 * c as f64 / n as f64 + 0.4 * z + 40.0 * (r as f64 / 7.0).sin(), 1)
    })?;

    let land_use = Grid::from_fn(g, DEFAULT_CLASS_NODATA, |r, c| {
        let z = dem.get(r, c);
        if z < 150.0 {
            1
        } else if (r as f64 - 0.8 * n as f64).abs() < 5.0 * scale || r == road_row {
            2
        } else {
            3
        }
    })?;

    // Plant landslides on the steepest ~12% of cells, plus a little noise.
    let mut steep: Vec<(f64, usize)> = slope
        .values()
        .iter()
        .copied()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    steep.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let steep_cells: Vec<usize> = steep[..steep.len() * 12 / 100].iter().map(|&(_, i)| i).collect();
    let n_planted = (n * n * 5 / 100).clamp(10, 5000);
    let mut points = Vec::new();
    let mut used = vec![false; n * n];
    let mut add = |i: usize, rng: &mut ChaCha8Rng, points: &mut Vec<InventoryPoint>| {
        if std::mem::replace(&mut used[i], true) {
            return;
        }
        let (x, y) = g.cell_center(i / n, i % n);
        let jx = rng.gen_range(-0.4..0.4) * CELL_SIZE;
        let jy = rng.gen_range(-0.4..0.4) * CELL_SIZE;
        points.push(InventoryPoint {
            x: round_to(x + jx, 2),
            y: round_to(y + jy, 2),
            id: Some(format!("LS{:04}", points.len() + 1)),
        });
    };
    while points.len() < n_planted {
        let i = steep_cells[rng.gen_range(0..steep_cells.len())];
        add(i, &mut rng, &mut points);
    }
    for _ in 0..n_planted / 10 {
        let i = rng.gen_range(0..n * n);
        add(i, &mut rng, &mut points);
    }

    Ok(Catchment {
        dem,
        dem_old,
        roads,
        nir,
        red,
        rainfall,
        land_use,
        inventory: InventoryPoints::new(points)?,
    })
}

/// Reference configuration with thirteen conditioning factors.
pub const REFERENCE_CONFIG: &str = r#"# Frequency-ratio susceptibility run over the synthetic catchment.
# Relative paths resolve against this file's directory.

output_dir = "out"
dem = "dem.asc"
dem_old = "dem_old.asc"
stream_threshold = 40
density_radius = 150.0
cut_fill_tolerance = 0.0

[inputs]
roads = "roads.asc"
nir = "nir.asc"
red = "red.asc"

[inventory]
points = "inventory.csv"

[zonation]
method = "jenks"
k = 5

[validation]
train_ratio = 0.7
seed = 42
bins = 100

[[factors]]
name = "slope"
derived = "slope"
classification = { method = "jenks", k = 5 }

[[factors]]
name = "elevation"
derived = "elevation"
classification = { method = "jenks", k = 5 }

[[factors]]
name = "aspect"
derived = "aspect"
classification = { method = "equal_interval", k = 5 }

[[factors]]
name = "curvature"
derived = "curvature"
classification = { method = "jenks", k = 5 }

[[factors]]
name = "spi"
derived = "spi"
classification = { method = "jenks", k = 5 }

[[factors]]
name = "twi"
derived = "twi"
classification = { method = "jenks", k = 5 }

[[factors]]
name = "drainage_distance"
derived = "drainage_distance"
classification = { method = "jenks", k = 5 }

[[factors]]
name = "drainage_density"
derived = "drainage_density"
classification = { method = "jenks", k = 5 }

[[factors]]
name = "road_distance"
derived = "road_distance"
classification = { method = "jenks", k = 5 }

[[factors]]
name = "rainfall"
file = "rainfall.asc"
classification = { method = "jenks", k = 5 }

[[factors]]
name = "land_use"
file = "land_use.asc"
kind = "categorical"
classification = { method = "categorical", labels = { 1 = "Water Body", 2 = "Settlement Area", 3 = "Vegetation" } }

[[factors]]
name = "cut_fill"
derived = "cut_fill"
kind = "categorical"
classification = { method = "categorical", labels = { 0 = "Unchanged", 1 = "Net Gain", 2 = "Net Loss" } }

[[factors]]
name = "ndvi"
derived = "ndvi"
classification = { method = "jenks", k = 5 }
"#;

/// Writes the catchment rasters, inventory and reference config into `dir`.
pub fn write_dataset(dir: impl AsRef<Path>, n: usize) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let c = catchment(n)?;
    write_ascii_grid(&c.dem, dir.join("dem.asc"))?;
    write_ascii_grid(&c.dem_old, dir.join("dem_old.asc"))?;
    write_ascii_grid(&c.roads, dir.join("roads.asc"))?;
    write_ascii_grid(&c.nir, dir.join("nir.asc"))?;
    write_ascii_grid(&c.red, dir.join("red.asc"))?;
    write_ascii_grid(&c.rainfall, dir.join("rainfall.asc"))?;
    write_ascii_grid(&c.land_use, dir.join("land_use.asc"))?;
    c.inventory.write_csv(dir.join("inventory.csv"))?;
    let cfg = dir.join("config.toml");
    fs::write(&cfg, REFERENCE_CONFIG).map_err(|e| Error::io(&cfg, e))
}
