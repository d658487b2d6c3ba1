#ifndef METRIC_MAGNITUDE_H
#define METRIC_MAGNITUDE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status codes returned by every fallible function.
typedef enum MmStatus {
  MM_STATUS_OK = 0,
  MM_STATUS_NULL_POINTER = 1,
  MM_STATUS_INVALID_ARGUMENT = 2,
  MM_STATUS_INVALID_METRIC = 3,
  MM_STATUS_ILL_CONDITIONED = 4,
  MM_STATUS_SINGULAR = 5,
  MM_STATUS_NOT_CONVERGED = 6,
  MM_STATUS_NOT_ULTRAMETRIC = 7,
  MM_STATUS_BUFFER_TOO_SMALL = 8,
  MM_STATUS_PANIC = 9,
} MmStatus;

// Opaque handle to a validated finite metric space.
typedef struct MmSpace MmSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Build a space from a row-major `n × n` distance matrix.
//
// # Safety
// `dist` must point to `n * n` readable doubles and `out` to writable
// storage for one handle pointer.
enum MmStatus mm_space_from_matrix(const double *dist, size_t n, struct MmSpace **out);

// Build a Euclidean space from `n` points of dimension `dim`, row-major.
//
// # Safety
// `coords` must point to `n * dim` readable doubles and `out` to writable
// storage for one handle pointer.
enum MmStatus mm_space_from_points(const double *coords,
                                   size_t n,
                                   size_t dim,
                                   struct MmSpace **out);

// Release a handle. Null is ignored.
//
// # Safety
// `space` must be null or a handle from `mm_space_from_*` not yet freed.
void mm_space_free(struct MmSpace *space);

// Number of points.
//
// # Safety
// `space` must be a live handle and `out` writable.
enum MmStatus mm_space_len(const struct MmSpace *space, size_t *out);

// Magnitude of `tA`.
//
// # Safety
// `space` must be a live handle and `out` writable.
enum MmStatus mm_magnitude(const struct MmSpace *space, double t, double *out);

// Weighting of `tA`, written to `out[0..len]`; `len` must equal the
// number of points.
//
// # Safety
// `space` must be a live handle and `out` must point to `len` writable doubles.
enum MmStatus mm_weighting(const struct MmSpace *space, double t, double *out, size_t len);

// Maximum diversity of `tA` with duality-gap tolerance `tolerance`
// (`<= 0` selects the default). The maximizing distribution is written to
// `mu[0..len]` when `mu` is not null. `certified` (nullable) reports
// whether the optimum is certified global.
//
// # Safety
// `space` must be a live handle, `value` writable, and `mu` null or
// pointing to `len` writable doubles.
enum MmStatus mm_max_diversity(const struct MmSpace *space,
                               double t,
                               double tolerance,
                               double *value,
                               double *mu,
                               size_t len,
                               bool *certified);

// Minimum number of closed `epsilon`-balls centred in the space that
// cover it. `exact` (nullable) is false when only a greedy bound was
// computed.
//
// # Safety
// `space` must be a live handle, `out` writable, `exact` null or writable.
enum MmStatus mm_covering_number(const struct MmSpace *space,
                                 double epsilon,
                                 size_t *out,
                                 bool *exact);

// Maximum number of disjoint closed `epsilon`-balls centred in the space.
//
// # Safety
// Same as `mm_covering_number`.
enum MmStatus mm_packing_number(const struct MmSpace *space,
                                double epsilon,
                                size_t *out,
                                bool *exact);

// Ultramagnitude of `tA`. Fails with `NotUltrametric` otherwise.
//
// # Safety
// `space` must be a live handle and `out` writable.
enum MmStatus mm_ultramagnitude(const struct MmSpace *space, double t, size_t *out);

// Message for the last failure on this thread, or null. The pointer is
// valid until the next call into this library from the same thread.
const char *mm_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* METRIC_MAGNITUDE_H */
