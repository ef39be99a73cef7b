//! Reclassification of continuous rasters into 1-based class IDs.
//!
//! Intervals are left-open and right-closed, with the first class closed
//! below: class `i` holds `uppers[i-2] < v <= uppers[i-1]`. Values above the
//! last upper bound fall into the last class.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::map_index;
use crate::raster::{CellValue, ClassGrid, FloatGrid, Grid, DEFAULT_CLASS_NODATA};

/// Largest value count handed to the exact Jenks solver; bigger rasters are
/// subsampled deterministically.
pub const JENKS_MAX_SAMPLE: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakMethod {
    Jenks,
    EqualInterval,
    Manual,
    Categorical,
}

impl BreakMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BreakMethod::Jenks => "jenks",
            BreakMethod::EqualInterval => "equal_interval",
            BreakMethod::Manual => "manual",
            BreakMethod::Categorical => "categorical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassBreaks {
    method: BreakMethod,
    uppers: Vec<f64>,
    /// Lower bound of the first class, when known (used for labels only).
    lower: Option<f64>,
}

impl ClassBreaks {
    fn build(method: BreakMethod, uppers: Vec<f64>, lower: Option<f64>) -> Result<Self> {
        if uppers.is_empty() {
            return Err(Error::invalid("class breaks are empty"));
        }
        if uppers.iter().any(|u| u.is_nan()) {
            return Err(Error::invalid("class breaks contain NaN"));
        }
        if uppers.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(format!(
                "class upper bounds must be strictly increasing: {uppers:?}"
            )));
        }
        if matches!(method, BreakMethod::Jenks | BreakMethod::EqualInterval) && uppers.len() < 2 {
            return Err(Error::invalid("generated classifications need k >= 2"));
        }
        Ok(ClassBreaks {
            method,
            uppers,
            lower,
        })
    }

    /// Explicit upper bounds, e.g. zonation thresholds. `f64::INFINITY` is a
    /// valid last bound.
    pub fn manual(uppers: Vec<f64>) -> Result<Self> {
        Self::build(BreakMethod::Manual, uppers, None)
    }

    /// Explicit category IDs; reclassification passes them through.
    pub fn categorical(mut ids: Vec<i32>) -> Result<Self> {
        ids.sort_unstable();
        ids.dedup();
        if ids.iter().any(|&i| i < 0) {
            return Err(Error::invalid("category IDs must be non-negative"));
        }
        Self::build(
            BreakMethod::Categorical,
            ids.into_iter().map(f64::from).collect(),
            None,
        )
    }

    pub fn with_lower(mut self, lower: f64) -> Self {
        self.lower = Some(lower);
        self
    }

    pub fn method(&self) -> BreakMethod {
        self.method
    }

    pub fn uppers(&self) -> &[f64] {
        &self.uppers
    }

    pub fn lower(&self) -> Option<f64> {
        self.lower
    }

    pub fn class_count(&self) -> usize {
        self.uppers.len()
    }

    /// 1-based class of `v`.
    #[inline]
    pub fn class_of(&self, v: f64) -> i32 {
        if self.method == BreakMethod::Categorical {
            return v as i32;
        }
        let idx = self.uppers.partition_point(|&u| u < v);
        (idx.min(self.uppers.len() - 1) + 1) as i32
    }

    /// Human-readable label per class, `"lo - hi"` style.
    pub fn labels(&self) -> Vec<String> {
        if self.method == BreakMethod::Categorical {
            return self.uppers.iter().map(|u| format!("{}", *u as i64)).collect();
        }
        let mut out = Vec::with_capacity(self.uppers.len());
        let mut prev = self.lower;
        for &u in &self.uppers {
            out.push(match prev {
                Some(lo) => format!("{} - {}", crate::report::sig6(lo), crate::report::sig6(u)),
                None => format!("<= {}", crate::report::sig6(u)),
            });
            prev = Some(u);
        }
        out
    }

    /// `class_id,lower,upper,label` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("class_id,lower,upper,label\n");
        let labels = self.labels();
        let mut prev = self.lower;
        for (i, (&u, label)) in self.uppers.iter().zip(&labels).enumerate() {
            let lo = prev.map(crate::report::sig6).unwrap_or_default();
            let id = if self.method == BreakMethod::Categorical { u as i64 } else { i as i64 + 1 };
            let _ = writeln!(s, "{},{},{},{}", id, lo, crate::report::sig6(u), label);
            prev = Some(u);
        }
        s
    }
}

/// Uppers at `min + i·(max − min)/k`, the last pinned to `max`.
pub fn equal_interval_breaks(min: f64, max: f64, k: usize) -> Result<ClassBreaks> {
    if k < 2 {
        return Err(Error::invalid(format!("equal interval needs k >= 2, got {k}")));
    }
    if !(max > min) || !min.is_finite() || !max.is_finite() {
        return Err(Error::invalid(format!(
            "equal interval needs a non-degenerate range, got [{min}, {max}]"
        )));
    }
    let step = (max - min) / k as f64;
    let uppers = (1..=k)
        .map(|i| if i == k { max } else { min + i as f64 * step })
        .collect();
    ClassBreaks::build(BreakMethod::EqualInterval, uppers, Some(min))
}

/// Fisher-Jenks natural breaks: the partition of the sorted values into `k`
/// contiguous classes with minimum total within-class sum of squared
/// deviations. Exact (dynamic programming over distinct values with
/// multiplicities).
pub fn jenks_breaks(values: &[f64], k: usize) -> Result<ClassBreaks> {
    if k < 2 {
        return Err(Error::invalid(format!("jenks needs k >= 2, got {k}")));
    }
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut xs: Vec<f64> = Vec::new();
    let mut ws: Vec<f64> = Vec::new();
    for v in sorted {
        match xs.last() {
            Some(&last) if last == v => *ws.last_mut().unwrap() += 1.0,
            _ => {
                xs.push(v);
                ws.push(1.0);
            }
        }
    }
    if xs.len() < k {
        return Err(Error::invalid(format!(
            "jenks needs at least {k} distinct values, got {}",
            xs.len()
        )));
    }
    let ends = optimal_partition(&xs, &ws, k);
    let uppers = ends.iter().map(|&e| xs[e]).collect();
    ClassBreaks::build(BreakMethod::Jenks, uppers, Some(xs[0]))
}

/// Weighted prefix sums over shifted values for O(1) segment SSD.
struct Segments {
    w: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Segments {
    fn new(xs: &[f64], ws: &[f64]) -> Self {
        let shift = xs[xs.len() / 2];
        let n = xs.len();
        let (mut w, mut s1, mut s2) = (vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
        for i in 0..n {
            let d = xs[i] - shift;
            w[i + 1] = w[i] + ws[i];
            s1[i + 1] = s1[i] + ws[i] * d;
            s2[i + 1] = s2[i] + ws[i] * d * d;
        }
        Segments { w, s1, s2 }
    }

    /// SSD of distinct values `j..=i`.
    #[inline]
    fn cost(&self, j: usize, i: usize) -> f64 {
        let w = self.w[i + 1] - self.w[j];
        let s1 = self.s1[i + 1] - self.s1[j];
        let s2 = self.s2[i + 1] - self.s2[j];
        (s2 - s1 * s1 / w).max(0.0)
    }
}

/// Inclusive end index (into `xs`) of each of the `k` optimal classes.
fn optimal_partition(xs: &[f64], ws: &[f64], k: usize) -> Vec<usize> {
    let n = xs.len();
    let seg = Segments::new(xs, ws);
    // cost[q][i]: best cost of values 0..=i in q+1 classes; start[q][i]: first
    // index of the last class in that solution.
    let mut cost = vec![vec![f64::INFINITY; n]; k];
    let mut start = vec![vec![0usize; n]; k];
    for i in 0..n {
        cost[0][i] = seg.cost(0, i);
    }
    for q in 1..k {
        let (prev, cur) = cost.split_at_mut(q);
        fill_row(&seg, &prev[q - 1], &mut cur[0], &mut start[q], q, q, n - 1, q, n - 1);
    }
    let mut ends = vec![0usize; k];
    let mut i = n - 1;
    for q in (0..k).rev() {
        ends[q] = i;
        if q > 0 {
            i = start[q][i] - 1;
        }
    }
    ends
}

/// Divide-and-conquer row fill: the optimal start of the last class is
/// monotone in `i`, so the search window shrinks around each midpoint.
#[allow(clippy::too_many_arguments)]
fn fill_row(
    seg: &Segments,
    prev: &[f64],
    cur: &mut [f64],
    start: &mut [usize],
    q: usize,
    imin: usize,
    imax: usize,
    jmin: usize,
    jmax: usize,
) {
    if imin > imax {
        return;
    }
    let i = imin + (imax - imin) / 2;
    let lo = jmin.max(q);
    let hi = jmax.min(i);
    let mut best = f64::INFINITY;
    let mut best_j = lo;
    for j in lo..=hi {
        let c = prev[j - 1] + seg.cost(j, i);
        if c < best {
            best = c;
            best_j = j;
        }
    }
    cur[i] = best;
    start[i] = best_j;
    if i > imin {
        fill_row(seg, prev, cur, start, q, imin, i - 1, jmin, best_j);
    }
    fill_row(seg, prev, cur, start, q, i + 1, imax, best_j, jmax);
}

/// Non-nodata values of a grid, or a deterministic stratified sample of
/// `max` of them (one seeded pick per equal-width stratum of the cell index).
pub fn sample_values(grid: &FloatGrid, max: usize, seed: u64) -> Vec<f64> {
    let valid: Vec<f64> = grid.valid_values().collect();
    if valid.len() <= max {
        return valid;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = valid.len();
    (0..max)
        .map(|s| {
            let lo = s * n / max;
            let hi = ((s + 1) * n / max).max(lo + 1);
            valid[rng.gen_range(lo..hi)]
        })
        .collect()
}

/// Jenks breaks of a raster: exact on all valid cells up to
/// [`JENKS_MAX_SAMPLE`], otherwise on a seeded stratified sample. The last
/// upper is the data maximum either way.
pub fn jenks_breaks_for_grid(grid: &FloatGrid, k: usize, seed: u64) -> Result<ClassBreaks> {
    let sample = sample_values(grid, JENKS_MAX_SAMPLE, seed);
    let mut b = jenks_breaks(&sample, k)?;
    if let Some((lo, hi)) = grid.min_max() {
        let last = b.uppers.len() - 1;
        if hi > b.uppers[last] {
            b.uppers[last] = hi;
        }
        b.lower = Some(lo);
    }
    Ok(b)
}

/// Maps every valid cell to its class ID; nodata stays nodata.
pub fn reclassify<T: CellValue>(grid: &Grid<T>, breaks: &ClassBreaks) -> Result<ClassGrid> {
    if breaks.uppers.is_empty() {
        return Err(Error::invalid("class breaks are empty"));
    }
    if breaks.method == BreakMethod::Categorical {
        if let Some(v) = grid
            .valid_values()
            .map(CellValue::to_f64)
            .find(|v| v.fract() != 0.0 || *v < 0.0)
        {
            return Err(Error::invalid(format!(
                "categorical passthrough requires non-negative integer IDs, found {v}"
            )));
        }
    }
    let values = map_index(grid.len(), |i| match grid.value_at(i) {
        Some(v) => breaks.class_of(v.to_f64()),
        None => DEFAULT_CLASS_NODATA,
    });
    Ok(grid.with_values(values, DEFAULT_CLASS_NODATA))
}

/// Total within-class sum of squared deviations for a given set of uppers.
pub fn within_class_ssd(values: &[f64], breaks: &ClassBreaks) -> f64 {
    let k = breaks.class_count();
    let mut groups = vec![Vec::new(); k];
    for &v in values {
        groups[(breaks.class_of(v) - 1) as usize].push(v);
    }
    groups
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| {
            let mean = g.iter().sum::<f64>() / g.len() as f64;
            g.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        })
        .sum()
}
