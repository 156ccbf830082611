#ifndef FILTLAB_H
#define FILTLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define FILTLAB_OK 0

/**
 * A required pointer was null.
 */
#define FILTLAB_ERR_NULL 1

/**
 * Malformed input: shapes, negative or non-finite entries, bad measures.
 */
#define FILTLAB_ERR_INVALID 2

#define FILTLAB_ERR_SIZE 3

#define FILTLAB_ERR_SOLVER 4

/**
 * A Rust panic was caught at the boundary.
 */
#define FILTLAB_ERR_PANIC 5

/**
 * Finite semimetric space.
 */
typedef struct FiltlabMetric FiltlabMetric;

/**
 * Labeled tree of fixed shape with a semimetric on its labels.
 */
typedef struct FiltlabTree FiltlabTree;

/**
 * Lower and upper bounds on the epsilon-entropy, in bits.
 */
typedef struct FiltlabEntropyBounds {
  double epsilon;
  double lower;
  double upper;
  /**
   * Transport cost of the quantization achieving `upper`.
   */
  double upper_cost;
} FiltlabEntropyBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The string stays valid until the next call into the library on the same
 * thread.
 */
const char *filtlab_last_error_message(void);

/**
 * Builds a semimetric from a row-major `size * size` matrix. The matrix must
 * have a zero diagonal, be symmetric and satisfy the triangle inequality.
 *
 * # Safety
 * `distances` must point to `size * size` doubles and `out` must be writable.
 */
int32_t filtlab_metric_new(size_t size, const double *distances, struct FiltlabMetric **out);

/**
 * Number of points of `metric`, or 0 when it is null.
 *
 * # Safety
 * `metric` must be null or a live handle.
 */
size_t filtlab_metric_size(const struct FiltlabMetric *metric);

/**
 * # Safety
 * `metric` must be null or a handle from [`filtlab_metric_new`] that has not
 * been freed.
 */
void filtlab_metric_free(struct FiltlabMetric *metric);

/**
 * Kantorovich distance between two probability vectors on `metric`.
 *
 * # Safety
 * `mu` and `nu` must point to as many doubles as the metric has points.
 */
int32_t filtlab_kantorovich(const struct FiltlabMetric *metric,
                            const double *mu,
                            const double *nu,
                            double *out_value);

/**
 * Bounds on the epsilon-entropy of `(metric, weights)`.
 *
 * # Safety
 * `weights` must point to as many doubles as the metric has points.
 */
int32_t filtlab_entropy_bounds(const struct FiltlabMetric *metric,
                               const double *weights,
                               double epsilon,
                               struct FiltlabEntropyBounds *out_bounds);

/**
 * Builds a tree whose level `i` nodes have `radices[i]` children and whose
 * leaves carry `labels` in lexicographic order. Labels index the
 * `alphabet * alphabet` row-major `label_distances`.
 *
 * # Safety
 * `radices` must point to `height` values, `labels` to the product of the
 * radices, and `label_distances` to `alphabet * alphabet` doubles.
 */
int32_t filtlab_tree_new(const size_t *radices,
                         size_t height,
                         const uint32_t *labels,
                         size_t label_count,
                         size_t alphabet,
                         const double *label_distances,
                         struct FiltlabTree **out);

/**
 * # Safety
 * `tree` must be null or a handle from [`filtlab_tree_new`] that has not
 * been freed.
 */
void filtlab_tree_free(struct FiltlabTree *tree);

/**
 * Minimum over tree automorphisms of the mean label distance between the
 * leaves of `a` and `b`. Both trees need the same shape and label metric.
 *
 * # Safety
 * `a` and `b` must be live handles.
 */
int32_t filtlab_tree_distance(const struct FiltlabTree *a,
                              const struct FiltlabTree *b,
                              double *out_value);

/**
 * Library version as a static NUL-terminated string.
 */
const char *filtlab_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FILTLAB_H */
