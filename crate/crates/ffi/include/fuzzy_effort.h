/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef FUZZY_EFFORT_H
#define FUZZY_EFFORT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum FeStatus {
  FE_STATUS_OK = 0,
  FE_STATUS_NULL_POINTER = 1,
  FE_STATUS_INVALID_UTF8 = 2,
  FE_STATUS_INVALID_ARGUMENT = 3,
  FE_STATUS_DATA_ERROR = 4,
  FE_STATUS_CONFIG_ERROR = 5,
  FE_STATUS_ESTIMATE_ERROR = 6,
  FE_STATUS_EVALUATION_ERROR = 7,
  FE_STATUS_PANIC = 8,
} FeStatus;

// Opaque project dataset.
typedef struct FeDataset FeDataset;

// Opaque estimator fitted to a dataset.
typedef struct FeEstimator FeEstimator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string. The
// pointer stays valid until the next call on this thread.
const char *fe_last_error_message(void);

// Library format version, a static string.
const char *fe_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void fe_string_free(char *s);

// Loads an ARFF file. `name` may be null; known dataset names (nasa60, nasa93,
// desharnais) select their column conventions.
//
// # Safety
// Pointers must be valid; `out` receives a handle to free with [`fe_dataset_free`].
enum FeStatus fe_dataset_from_arff(const char *path, const char *name, struct FeDataset **out);

// Loads a headered CSV file described by a JSON sidecar schema file.
//
// # Safety
// Pointers must be valid; `out` receives a handle to free with [`fe_dataset_free`].
enum FeStatus fe_dataset_from_csv(const char *csv_path,
                                  const char *schema_path,
                                  struct FeDataset **out);

// New handle holding only the complete projects of `dataset`.
//
// # Safety
// `dataset` must be a live handle; `out` receives a new handle.
enum FeStatus fe_dataset_drop_incomplete(const struct FeDataset *dataset, struct FeDataset **out);

// # Safety
// `dataset` must be a live handle.
enum FeStatus fe_dataset_len(const struct FeDataset *dataset, size_t *out);

// Mean actual effort.
//
// # Safety
// `dataset` must be a live handle.
enum FeStatus fe_dataset_mean_effort(const struct FeDataset *dataset, double *out);

// Dataset summary as JSON.
//
// # Safety
// `dataset` must be a live handle; free the string with [`fe_string_free`].
enum FeStatus fe_dataset_summary_json(const struct FeDataset *dataset, char **out);

// Releases a dataset handle. Null is ignored.
//
// # Safety
// `dataset` must come from this library and not be freed twice.
void fe_dataset_free(struct FeDataset *dataset);

// Fits an estimator. Incomplete projects are dropped first unless the
// configuration says otherwise.
//
// # Safety
// `dataset` must be a live handle; `config_json` may be null; free the result
// with [`fe_estimator_free`].
enum FeStatus fe_estimator_fit(const struct FeDataset *dataset,
                               const char *config_json,
                               struct FeEstimator **out);

// Estimates one query `{"id": ..., "values": {...}}`.
//
// # Safety
// `estimator` must be a live handle.
enum FeStatus fe_estimator_estimate(const struct FeEstimator *estimator,
                                    const char *query_json,
                                    double *out);

// Releases an estimator handle. Null is ignored.
//
// # Safety
// `estimator` must come from this library and not be freed twice.
void fe_estimator_free(struct FeEstimator *estimator);

// One-shot fit and estimate.
//
// # Safety
// `dataset` must be a live handle; `config_json` may be null.
enum FeStatus fe_estimate(const struct FeDataset *dataset,
                          const char *config_json,
                          const char *query_json,
                          double *out);

// One-shot estimate returning the full result (value, weights, analogs) as JSON.
//
// # Safety
// As [`fe_estimate`]; free the string with [`fe_string_free`].
enum FeStatus fe_estimate_json(const struct FeDataset *dataset,
                               const char *config_json,
                               const char *query_json,
                               char **out);

// Leave-one-out MMRE (%) of the configured estimator.
//
// # Safety
// `dataset` must be a live handle; `config_json` may be null.
enum FeStatus fe_evaluate_loo(const struct FeDataset *dataset,
                              const char *config_json,
                              double *out_mmre);

// Leave-one-out evaluation report as JSON.
//
// # Safety
// As [`fe_evaluate_loo`]; free the string with [`fe_string_free`].
enum FeStatus fe_evaluate_loo_json(const struct FeDataset *dataset,
                                   const char *config_json,
                                   char **out);

// `|actual - estimated| / actual`.
//
// # Safety
// `out` must be valid for writes.
enum FeStatus fe_mre(double actual, double estimated, double *out);

// Mean of `len` MRE values, as a percentage.
//
// # Safety
// `mres` must point to `len` readable doubles.
enum FeStatus fe_mmre(const double *mres, size_t len, double *out);

// `a * size^(b + 0.01 * sum(distances)) * prod(multipliers)`.
//
// # Safety
// `distances` and `multipliers` must point to the given number of doubles
// (either may be null when its length is 0).
enum FeStatus fe_cocomo_adjusted(double size,
                                 const double *distances,
                                 size_t n_distances,
                                 const double *multipliers,
                                 size_t n_multipliers,
                                 double a,
                                 double b,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FUZZY_EFFORT_H */
