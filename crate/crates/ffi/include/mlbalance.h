#ifndef MLBALANCE_H
#define MLBALANCE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MlbStatus {
  MLB_STATUS_OK = 0,
  MLB_STATUS_NULL_POINTER = 1,
  MLB_STATUS_INVALID_ARGUMENT = 2,
  MLB_STATUS_PARSE = 3,
  MLB_STATUS_DATA = 4,
  MLB_STATUS_IO = 5,
  MLB_STATUS_PANIC = 6,
} MlbStatus;

/**
 * Opaque dataset handle.
 */
typedef struct MlbDataset MlbDataset;

typedef struct MlbGlobalMeasures {
  double mean_ir;
  double cvir;
  double mean_imr;
  double cvimr;
  double scumble;
} MlbGlobalMeasures;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next library call on the same thread.
 */
const char *mlb_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mlb_version(void);

/**
 * Loads a Mulan dataset (ARFF file plus label XML file).
 *
 * # Safety
 * `arff_path` and `xml_path` must be NUL-terminated strings; `out` must be
 * writable. On success `*out` receives a handle owned by the caller.
 */
enum MlbStatus mlb_dataset_load_mulan(const char *arff_path,
                                      const char *xml_path,
                                      struct MlbDataset **out);

/**
 * Loads a CSV dataset whose last `label_count` columns are labels.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MlbStatus mlb_dataset_load_csv(const char *path, size_t label_count, struct MlbDataset **out);

/**
 * Builds a dataset from row-major numeric features (`n * d`) and 0/1 labels
 * (`n * q`). Columns are named `x0..`, labels `y0..`.
 *
 * # Safety
 * `features` must point to `n * d` doubles and `labels` to `n * q` bytes;
 * `out` must be writable.
 */
enum MlbStatus mlb_dataset_from_arrays(size_t n,
                                       size_t d,
                                       size_t q,
                                       const double *features,
                                       const uint8_t *labels,
                                       struct MlbDataset **out);

/**
 * Releases a dataset handle. NULL is ignored.
 *
 * # Safety
 * `ds` must be NULL or a handle returned by this library and not yet freed.
 */
void mlb_dataset_free(struct MlbDataset *ds);

/**
 * Writes instance, feature and label counts.
 *
 * # Safety
 * `ds` must be a live handle; each output pointer must be writable or NULL.
 */
enum MlbStatus mlb_dataset_shape(const struct MlbDataset *ds, size_t *n, size_t *d, size_t *q);

/**
 * Copies the row-major feature matrix into `buf` (`len` must be `n * d`).
 * Nominal cells hold category indices.
 *
 * # Safety
 * `ds` must be a live handle and `buf` must have room for `len` doubles.
 */
enum MlbStatus mlb_dataset_features(const struct MlbDataset *ds, double *buf, size_t len);

/**
 * Copies the row-major 0/1 label matrix into `buf` (`len` must be `n * q`).
 *
 * # Safety
 * `ds` must be a live handle and `buf` must have room for `len` bytes.
 */
enum MlbStatus mlb_dataset_labels(const struct MlbDataset *ds, uint8_t *buf, size_t len);

/**
 * Computes the dataset-level global imbalance measures.
 *
 * # Safety
 * `ds` must be a live handle and `out` writable.
 */
enum MlbStatus mlb_global_measures(const struct MlbDataset *ds, struct MlbGlobalMeasures *out);

/**
 * Local imbalance (LImb) with `k` neighbors.
 *
 * # Safety
 * `ds` must be a live handle and `out` writable.
 */
enum MlbStatus mlb_limb(const struct MlbDataset *ds, size_t k, double *out);

/**
 * Resamples `ds` with `method` ("mlsol", "mlul", "mlros" or "mlrus").
 *
 * # Safety
 * `ds` must be a live handle, `method` a NUL-terminated string and `out`
 * writable. On success `*out` receives a new handle owned by the caller.
 */
enum MlbStatus mlb_sample(const struct MlbDataset *ds,
                          const char *method,
                          double ratio,
                          size_t k,
                          uint64_t seed,
                          struct MlbDataset **out);

/**
 * Writes `ds` to `path` as "arff" (plus a label XML with the same stem) or "csv".
 *
 * # Safety
 * `ds` must be a live handle; `path` and `format` NUL-terminated strings.
 */
enum MlbStatus mlb_dataset_write(const struct MlbDataset *ds, const char *path, const char *format);

/**
 * Global measures plus LImb at `k` as a JSON object. Free the result with
 * [`mlb_string_free`].
 *
 * # Safety
 * `ds` must be a live handle and `out` writable.
 */
enum MlbStatus mlb_measure_json(const struct MlbDataset *ds, size_t k, char **out);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void mlb_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MLBALANCE_H */
