#ifndef MCQDEBIAS_H
#define MCQDEBIAS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum McqStatus {
  MCQ_STATUS_OK = 0,
  MCQ_STATUS_NULL_POINTER = 1,
  // Malformed or out-of-range input, including bad JSON.
  MCQ_STATUS_INVALID_ARGUMENT = 2,
  MCQ_STATUS_IO = 3,
  MCQ_STATUS_INTERNAL = 4,
  MCQ_STATUS_PANIC = 5,
} McqStatus;

// Which bias vector of an estimate to read.
typedef enum McqBiasKind {
  MCQ_BIAS_KIND_GENERAL = 0,
  MCQ_BIAS_KIND_CONTEXTUAL = 1,
  MCQ_BIAS_KIND_ENSEMBLE = 2,
} McqBiasKind;

typedef enum McqAlphabet {
  MCQ_ALPHABET_ALPHABETIC = 0,
  MCQ_ALPHABET_NUMERIC = 1,
} McqAlphabet;

// Calibrated bias vectors for one identifier alphabet.
typedef struct McqBiasEstimate McqBiasEstimate;

// Seeded synthetic answering model.
typedef struct McqSyntheticModel McqSyntheticModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call on the same thread.
const char *mcq_last_error(void);

// Library version as a static NUL-terminated string.
const char *mcq_version(void);

// # Safety
// `logits` and `out` must point to 4 doubles.
enum McqStatus mcq_softmax4(const double *logits, double *out);

// # Safety
// `values` and `out` must point to 4 doubles.
enum McqStatus mcq_zero_center(const double *values, double *out);

// `max(L) − mean(L)`.
//
// # Safety
// `logits` must point to 4 doubles; `out` to one.
enum McqStatus mcq_confidence(const double *logits, double *out);

// # Safety
// `out` must point to one double.
enum McqStatus mcq_adaptive_alpha(double conf, double alpha, double tau, double *out);

// Corrects `logits` by the zero-centered `bias`.
//
// # Safety
// `logits`, `bias` and `out` must point to 4 doubles.
enum McqStatus mcq_correct_logits(const double *logits,
                                  const double *bias,
                                  double alpha,
                                  double tau,
                                  double *out);

// Total-variation distance between two probability vectors.
//
// # Safety
// `pred` and `truth` must point to 4 doubles; `out` to one.
enum McqStatus mcq_bias_score(const double *pred, const double *truth, double *out);

// Loads a bias estimate file written by `mcqdebias calibrate`.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum McqStatus mcq_bias_estimate_load(const char *path, struct McqBiasEstimate **out);

// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum McqStatus mcq_bias_estimate_from_json(const char *json, struct McqBiasEstimate **out);

// # Safety
// `est` must come from a `mcq_bias_estimate_*` constructor; `out` must
// point to 4 doubles.
enum McqStatus mcq_bias_estimate_vector(const struct McqBiasEstimate *est,
                                        enum McqBiasKind kind,
                                        double *out);

// # Safety
// `est` must be a live handle; `out` must be writable.
enum McqStatus mcq_bias_estimate_alphabet(const struct McqBiasEstimate *est, enum McqAlphabet *out);

// Applies the estimate's ensemble correction with its stored alpha and tau.
//
// # Safety
// `est` must be a live handle; `logits` and `out` must point to 4 doubles.
enum McqStatus mcq_bias_estimate_correct(const struct McqBiasEstimate *est,
                                         const double *logits,
                                         double *out);

// # Safety
// `est` must be NULL or a handle not yet freed.
void mcq_bias_estimate_free(struct McqBiasEstimate *est);

// Creates a model from a JSON parameter object (`competence`, `token_bias`,
// `position_bias`, `noise_sigma`, `seed`).
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum McqStatus mcq_synthetic_model_from_json(const char *json, struct McqSyntheticModel **out);

// Logits for `item_id` shown under `ordering` (e.g. `"DCBA"`), with the
// correct option in `correct_slot` (0..3, or -1 for content-free prompts).
//
// # Safety
// `model` must be a live handle; strings NUL-terminated; `out` must point
// to 4 doubles.
enum McqStatus mcq_synthetic_model_logits(const struct McqSyntheticModel *model,
                                          const char *item_id,
                                          const char *ordering,
                                          int32_t correct_slot,
                                          double *out);

// # Safety
// `model` must be NULL or a handle not yet freed.
void mcq_synthetic_model_free(struct McqSyntheticModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCQDEBIAS_H */
