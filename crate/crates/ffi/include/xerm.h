#ifndef XERM_H
#define XERM_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum XermStatus {
  XERM_STATUS_OK = 0,
  XERM_STATUS_NULL_POINTER = 1,
  XERM_STATUS_INVALID_ARGUMENT = 2,
  XERM_STATUS_SHAPE_MISMATCH = 3,
  XERM_STATUS_CORRUPT_CHECKPOINT = 4,
  XERM_STATUS_NON_FINITE = 5,
  XERM_STATUS_IO = 6,
  XERM_STATUS_BUFFER_TOO_SMALL = 7,
  XERM_STATUS_PANIC = 8,
} XermStatus;

typedef enum XermArch {
  XERM_ARCH_LINEAR = 0,
  XERM_ARCH_MLP1 = 1,
} XermArch;

// Trained classifier parameters.
typedef struct XermModel XermModel;

// Class prior `π` for logit adjustment.
typedef struct XermPrior XermPrior;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `cap`). Returns the full message length.
//
// # Safety
// `buf` must be null or valid for `cap` bytes.
size_t xerm_last_error(char *buf, size_t cap);

// Static, NUL-terminated name of a status code.
const char *xerm_status_name(enum XermStatus status);

// Glorot-initialized model. `hidden` is ignored for `XERM_ARCH_LINEAR`.
// `f32_storage` rounds parameters to single precision.
//
// # Safety
// `out` must be valid for a pointer write.
enum XermStatus xerm_model_init(enum XermArch arch,
                                size_t dims,
                                size_t hidden,
                                size_t classes,
                                bool f32_storage,
                                uint64_t seed,
                                struct XermModel **out);

// Parses checkpoint bytes.
//
// # Safety
// `bytes` must be valid for `len` bytes; `out` for a pointer write.
enum XermStatus xerm_model_load(const uint8_t *bytes, size_t len, struct XermModel **out);

// Reads a checkpoint file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` valid for a pointer write.
enum XermStatus xerm_model_load_file(const char *path, struct XermModel **out);

// Serializes the model. With `buf` null or `cap` too small, only writes the
// required size to `written` and returns `XERM_STATUS_BUFFER_TOO_SMALL`
// (`XERM_STATUS_OK` if `buf` is null).
//
// # Safety
// `model` must come from this library; `buf` null or valid for `cap`
// bytes; `written` valid for a write.
enum XermStatus xerm_model_save(const struct XermModel *model,
                                uint8_t *buf,
                                size_t cap,
                                size_t *written);

// # Safety
// `model` must be null or come from this library and not be used again.
void xerm_model_free(struct XermModel *model);

// Input dimension, hidden width (0 for linear) and class count.
//
// # Safety
// All pointers must be valid.
enum XermStatus xerm_model_shape(const struct XermModel *model,
                                 size_t *dims,
                                 size_t *hidden,
                                 size_t *classes);

// Writes the `classes` logits of one sample.
//
// # Safety
// `x` valid for `dims` doubles, `logits` for `classes` doubles.
enum XermStatus xerm_model_logits(const struct XermModel *model,
                                  const double *x,
                                  size_t dims,
                                  double *logits,
                                  size_t classes);

// Argmax class of `n` row-major samples.
//
// # Safety
// `x` valid for `n * dims` doubles, `predictions` for `n` entries.
enum XermStatus xerm_model_predict(const struct XermModel *model,
                                   const double *x,
                                   size_t n,
                                   size_t dims,
                                   uint32_t *predictions);

// Class probabilities after logit adjustment `z − τ·ln π`.
//
// # Safety
// `x` valid for `dims` doubles, `probs` for `classes` doubles.
enum XermStatus xerm_model_balanced_proba(const struct XermModel *model,
                                          const struct XermPrior *prior,
                                          double tau,
                                          const double *x,
                                          size_t dims,
                                          double *probs,
                                          size_t classes);

// Normalized class prior from per-class training counts (all positive).
//
// # Safety
// `counts` valid for `classes` entries; `out` for a pointer write.
enum XermStatus xerm_prior_from_counts(const uint64_t *counts,
                                       size_t classes,
                                       struct XermPrior **out);

// # Safety
// `prior` must be null or come from this library and not be used again.
void xerm_prior_free(struct XermPrior *prior);

// Per-sample weights `w_f = ce_f^γ / (ce_f^γ + ce_cf^γ)` and `w_cf = 1 − w_f`.
//
// # Safety
// `w_f` and `w_cf` must be valid for writes.
enum XermStatus xerm_compute_weights(double ce_f,
                                     double ce_cf,
                                     double gamma,
                                     double *w_f,
                                     double *w_cf);

// Composite loss of prediction `f` against label `y` and soft target
// `y_hat`; writes the loss and its gradient with respect to the logits.
//
// # Safety
// `f`, `y_hat` and `grad` valid for `classes` doubles; `loss` for a write.
enum XermStatus xerm_loss_eval(const double *f,
                               const double *y_hat,
                               size_t classes,
                               size_t y,
                               double w_f,
                               double w_cf,
                               double *loss,
                               double *grad);

// Long-tailed class sizes `floor(n_head · μ^((i−1)/(C−1)))`, clamped to 1.
//
// # Safety
// `counts` valid for `classes` entries.
enum XermStatus xerm_decay_counts(uint64_t n_head, size_t classes, double mu, uint64_t *counts);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XERM_H */
