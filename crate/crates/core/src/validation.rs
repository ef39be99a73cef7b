//! Inventory splitting, success/prediction-rate curves and their AUC.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inventory::InventoryPoints;
use crate::raster::{FloatGrid, MaskGrid};
use crate::report::sig6;

pub const DEFAULT_BINS: usize = 100;
pub const DEFAULT_TRAIN_RATIO: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: InventoryPoints,
    pub test: InventoryPoints,
    pub seed: u64,
    pub ratio: f64,
}

/// Seeded uniform partition with `|train| = round(ratio · N)`, kept within
/// `1..N` so neither side is empty. Both halves keep input order.
pub fn split_inventory(points: &InventoryPoints, train_ratio: f64, seed: u64) -> Result<SplitResult> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid(format!("splitting needs at least 2 points, got {n}")));
    }
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::invalid(format!("train ratio must be in (0, 1), got {train_ratio}")));
    }
    let n_train = ((train_ratio * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let (mut train, mut test) = (Vec::with_capacity(n_train), Vec::with_capacity(n - n_train));
    for (p, &t) in points.points.iter().zip(&in_train) {
        if t {
            train.push(p.clone());
        } else {
            test.push(p.clone());
        }
    }
    Ok(SplitResult {
        train: InventoryPoints { points: train },
        test: InventoryPoints { points: test },
        seed,
        ratio: train_ratio,
    })
}

/// Cumulative landslide fraction (y) against cumulative area fraction (x),
/// anchored at (0,0) and (1,1).
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    points: Vec<(f64, f64)>,
}

impl RateCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("a rate curve needs at least 2 points"));
        }
        if points[0] != (0.0, 0.0) || points[points.len() - 1] != (1.0, 1.0) {
            return Err(Error::invalid("rate curve must run from (0,0) to (1,1)"));
        }
        if points
            .windows(2)
            .any(|w| !(w[0].0 <= w[1].0) || !(w[0].1 <= w[1].1))
        {
            return Err(Error::invalid("rate curve coordinates must be non-decreasing"));
        }
        Ok(RateCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y\n");
        for &(x, y) in &self.points {
            let _ = writeln!(s, "{},{}", sig6(x), sig6(y));
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Ranks LSI cells from most to least susceptible and samples the cumulative
/// landslide capture at `bins` equal-area thresholds.
///
/// Cells tied in LSI are taken together, so a threshold never splits a tie
/// (a constant LSI yields just the two anchors). Sort ties fall back to cell
/// index for determinism.
pub fn success_rate_curve(lsi: &FloatGrid, inventory: &MaskGrid, bins: usize) -> Result<RateCurve> {
    lsi.check_aligned(inventory)?;
    if bins == 0 {
        return Err(Error::invalid("bins must be >= 1"));
    }
    let mut cells: Vec<(f64, usize)> = (0..lsi.len())
        .filter_map(|i| lsi.value_at(i).map(|v| (v, i)))
        .collect();
    let n = cells.len();
    let slide = |i: usize| inventory.value_at(i) == Some(1);
    let total_slides = cells.iter().filter(|&&(_, i)| slide(i)).count();
    if total_slides == 0 {
        return Err(Error::EmptyInventory(
            "no inventory cells fall inside the LSI domain".into(),
        ));
    }
    cells.par_sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    // cumulative slides after the first k cells, and the end of each tie run
    let mut cum = Vec::with_capacity(n + 1);
    cum.push(0usize);
    for &(_, i) in &cells {
        cum.push(cum.last().unwrap() + slide(i) as usize);
    }
    let mut run_end = vec![n; n];
    for k in (0..n.saturating_sub(1)).rev() {
        run_end[k] = if cells[k].0 == cells[k + 1].0 {
            run_end[k + 1]
        } else {
            k + 1
        };
    }

    let mut points = vec![(0.0, 0.0)];
    for j in 1..=bins {
        let k = (j * n).div_ceil(bins);
        let taken = run_end[k - 1];
        let pt = if taken == n {
            (1.0, 1.0)
        } else {
            (taken as f64 / n as f64, cum[taken] as f64 / total_slides as f64)
        };
        if *points.last().unwrap() != pt {
            points.push(pt);
        }
    }
    RateCurve::new(points)
}

/// Area under a rate curve:
/// `Σ (x_i − x_{i−1})·y_i − (x_i − x_{i−1})·(y_i − y_{i−1})/2`.
pub fn auc(curve: &RateCurve) -> Result<f64> {
    let p = curve.points();
    if p.len() < 2 {
        return Err(Error::invalid("auc needs at least 2 curve points"));
    }
    Ok(p.windows(2)
        .map(|w| {
            let dx = w[1].0 - w[0].0;
            let dy = w[1].1 - w[0].1;
            dx * w[1].1 - dx * dy / 2.0
        })
        .sum())
}

/// Qualitative model rating for an AUC value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AucBand {
    VeryGood,
    Good,
    Reasonable,
    Fair,
    Poor,
}

impl AucBand {
    pub fn of(auc: f64) -> Self {
        if auc >= 0.9 {
            AucBand::VeryGood
        } else if auc >= 0.8 {
            AucBand::Good
        } else if auc >= 0.7 {
            AucBand::Reasonable
        } else if auc >= 0.6 {
            AucBand::Fair
        } else {
            AucBand::Poor
        }
    }
}

impl fmt::Display for AucBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AucBand::VeryGood => "very good",
            AucBand::Good => "good",
            AucBand::Reasonable => "reasonable",
            AucBand::Fair => "fair",
            AucBand::Poor => "poor",
        })
    }
}
