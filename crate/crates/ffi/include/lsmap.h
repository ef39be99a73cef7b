#ifndef LSMAP_H
#define LSMAP_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum LsmStatus {
  LSM_STATUS_OK = 0,
  LSM_STATUS_NULL_POINTER = 1,
  LSM_STATUS_INVALID_ARGUMENT = 2,
  LSM_STATUS_IO = 3,
  LSM_STATUS_PARSE = 4,
  LSM_STATUS_VALIDATION = 5,
  LSM_STATUS_PANIC = 99,
} LsmStatus;

/*
 Opaque continuous grid. Class and mask grids use the same handle with
 integral values.
 */
typedef struct LsmGrid LsmGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the last failure on this thread, or NULL. Valid
 until the next call into this library from the same thread.
 */
const char *lsm_last_error(void);

/*
 Creates a grid from `n_rows * n_cols` row-major values (row 0 = north).

 # Safety
 `values` must point to `n_rows * n_cols` doubles; `out` must be writable.
 */
enum LsmStatus lsm_grid_new(uintptr_t n_rows,
                            uintptr_t n_cols,
                            double x_origin,
                            double y_origin,
                            double cell_size,
                            double nodata,
                            const double *values,
                            struct LsmGrid **out);

/*
 Releases a grid. NULL is ignored.

 # Safety
 `grid` must come from this library and not be used afterwards.
 */
void lsm_grid_free(struct LsmGrid *grid);

/*
 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum LsmStatus lsm_grid_read_ascii(const char *path, struct LsmGrid **out);

/*
 # Safety
 `grid` must be a live handle; `path` a NUL-terminated string.
 */
enum LsmStatus lsm_grid_write_ascii(const struct LsmGrid *grid, const char *path);

/*
 Grid dimensions, cell size and nodata value. Any out pointer may be NULL.

 # Safety
 `grid` must be a live handle; non-NULL out pointers must be writable.
 */
enum LsmStatus lsm_grid_info(const struct LsmGrid *grid,
                             uintptr_t *n_rows,
                             uintptr_t *n_cols,
                             double *cell_size,
                             double *nodata);

/*
 Copies all cell values (row-major) into `buf`, which must hold `len`
 doubles with `len >= n_rows * n_cols`.

 # Safety
 `buf` must be writable for `len` doubles.
 */
enum LsmStatus lsm_grid_copy_values(const struct LsmGrid *grid, double *buf, uintptr_t len);

/*
 Slope in degrees (Horn).

 # Safety
 `input` must be a live handle; `out` must be writable.
 */
enum LsmStatus lsm_slope(const struct LsmGrid *input, struct LsmGrid **out);

/*
 Aspect in degrees clockwise from north; -1 on flat cells.

 # Safety
 `input` must be a live handle; `out` must be writable.
 */
enum LsmStatus lsm_aspect(const struct LsmGrid *input, struct LsmGrid **out);

/*
 Curvature (x100).

 # Safety
 `input` must be a live handle; `out` must be writable.
 */
enum LsmStatus lsm_curvature(const struct LsmGrid *input, struct LsmGrid **out);

/*
 Upstream cell counts after depression filling and D8 routing.

 # Safety
 `input` must be a live handle; `out` must be writable.
 */
enum LsmStatus lsm_flow_accumulation(const struct LsmGrid *input, struct LsmGrid **out);

/*
 Euclidean distance to cells equal to 1.

 # Safety
 `input` must be a live handle; `out` must be writable.
 */
enum LsmStatus lsm_euclidean_distance(const struct LsmGrid *input, struct LsmGrid **out);

/*
 Stream power index from accumulation and slope (degrees).

 # Safety
 Both inputs must be live handles; `out` must be writable.
 */
enum LsmStatus lsm_spi(const struct LsmGrid *acc,
                       const struct LsmGrid *slope,
                       struct LsmGrid **out);

/*
 Topographic wetness index from accumulation and slope (degrees).

 # Safety
 Both inputs must be live handles; `out` must be writable.
 */
enum LsmStatus lsm_twi(const struct LsmGrid *acc,
                       const struct LsmGrid *slope,
                       struct LsmGrid **out);

/*
 Normalized difference vegetation index.

 # Safety
 Both inputs must be live handles; `out` must be writable.
 */
enum LsmStatus lsm_ndvi(const struct LsmGrid *nir, const struct LsmGrid *red, struct LsmGrid **out);

/*
 Drainage density of a 0/1 stream grid in a square window of half-width
 `radius` map units.

 # Safety
 `streams` must be a live handle; `out` must be writable.
 */
enum LsmStatus lsm_drainage_density(const struct LsmGrid *streams,
                                    double radius,
                                    struct LsmGrid **out);

/*
 Reclassifies with right-closed class upper bounds; classes are 1-based.

 # Safety
 `uppers` must hold `n_uppers` doubles; `out` must be writable.
 */
enum LsmStatus lsm_reclassify(const struct LsmGrid *input,
                              const double *uppers,
                              uintptr_t n_uppers,
                              struct LsmGrid **out);

/*
 Natural-breaks class upper bounds of `values` into `uppers_out[k]`.

 # Safety
 `values` must hold `n` doubles and `uppers_out` must be writable for `k`.
 */
enum LsmStatus lsm_jenks_breaks(const double *values, uintptr_t n, uintptr_t k, double *uppers_out);

/*
 Frequency ratio per class from class pixel counts and landslide pixel
 counts, written to `fr_out[len]`.

 # Safety
 All three arrays must hold `len` elements.
 */
enum LsmStatus lsm_frequency_ratio(const uint64_t *class_pixels,
                                   const uint64_t *slide_pixels,
                                   uintptr_t len,
                                   double *fr_out);

/*
 Area under a rate curve given as `len` points sorted by x, starting at
 (0,0) and ending at (1,1).

 # Safety
 `xs` and `ys` must hold `len` doubles; `out` must be writable.
 */
enum LsmStatus lsm_auc(const double *xs, const double *ys, uintptr_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LSMAP_H */
