//! Row-band data parallelism over grids.

use rayon::prelude::*;

/// Evaluates `f(row, col)` for every cell, parallel over rows. Output order
/// is row-major and independent of the worker count.
pub(crate) fn map_cells<U, F>(n_rows: usize, n_cols: usize, f: F) -> Vec<U>
where
    U: Send + Default + Clone,
    F: Fn(usize, usize) -> U + Sync,
{
    let mut out = vec![U::default(); n_rows * n_cols];
    out.par_chunks_mut(n_cols.max(1))
        .enumerate()
        .for_each(|(r, row)| {
            for (c, slot) in row.iter_mut().enumerate() {
                *slot = f(r, c);
            }
        });
    out
}

/// Cell-wise map over the flat index.
pub(crate) fn map_index<U, F>(len: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}
