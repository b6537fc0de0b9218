#ifndef QMETROLAB_H
#define QMETROLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum QmlStatus {
  /**
   * Success.
   */
  Ok = 0,
  /**
   * A pointer argument was null.
   */
  NullPointer = 1,
  /**
   * Parameters were rejected before any computation started.
   */
  InvalidArgument = 2,
  /**
   * The computation itself failed.
   */
  NumericalFailure = 3,
  /**
   * A panic was caught at the boundary; state may be stale.
   */
  Panic = 4,
} QmlStatus;

/**
 * Opaque model handle.
 */
typedef struct QmlModel QmlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * ABI revision; bump on any breaking layout or semantics change.
 */
uint32_t qml_abi_version(void);

/**
 * Copy the last error message for the calling thread into `buf`
 * (NUL-terminated, truncated to `len`). Returns the full message length.
 */
uintptr_t qml_last_error_message(char *buf, uintptr_t len);

/**
 * Create a spin model; `out` receives an owned handle on success.
 *
 * # Safety
 * `out` must be a valid writable pointer.
 */
enum QmlStatus qml_model_new(uintptr_t n,
                             double b,
                             double vartheta,
                             double alpha,
                             double gamma,
                             struct QmlModel **out);

/**
 * Release a model handle. A null handle is a no-op.
 *
 * # Safety
 * `model` must have come from [`qml_model_new`] and not be freed twice.
 */
void qml_model_free(struct QmlModel *model);

/**
 * Quantum Fisher information of the evolved state.
 *
 * `initial`: 0 = product state at angle `beta`, 1 = GHZ.
 * `param`: 0 = B, 1 = beta, 2 = vartheta. `method`: 0 = sld,
 * 1 = qubit closed form, 2 = Bloch.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum QmlStatus qml_qfi(const struct QmlModel *model,
                       uint32_t initial,
                       double beta,
                       uint32_t param,
                       double t,
                       uint32_t method,
                       double *out);

/**
 * Closed-form dephasing QFI pair (F_beta, F_B).
 *
 * # Safety
 * `out_f_beta` and `out_f_b` must be valid writable pointers.
 */
enum QmlStatus qml_dephasing_qfi(double beta,
                                 double gamma,
                                 double t,
                                 double *out_f_beta,
                                 double *out_f_b);

/**
 * Number of Liouvillian eigenvalues (the squared Hilbert dimension).
 *
 * # Safety
 * `model` must be a valid handle.
 */
uintptr_t qml_spectrum_len(const struct QmlModel *model);

/**
 * Liouvillian eigenvalues sorted by descending real part, written into
 * `out_re`/`out_im` (each of capacity `len`).
 *
 * # Safety
 * `out_re` and `out_im` must each point to at least `len` writable doubles.
 */
enum QmlStatus qml_spectrum(const struct QmlModel *model,
                            double *out_re,
                            double *out_im,
                            uintptr_t len);

/**
 * Steady-state timescale 1/|Re lambda_slow| and the kernel dimension.
 *
 * # Safety
 * All out-pointers must be valid.
 */
enum QmlStatus qml_steady_state_time(const struct QmlModel *model,
                                     double *out_t_sts,
                                     uintptr_t *out_kernel_dim);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* QMETROLAB_H */
