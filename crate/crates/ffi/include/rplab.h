#ifndef RPLAB_H
#define RPLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum RplabStatus {
  RPLAB_STATUS_OK = 0,
  RPLAB_STATUS_NULL_POINTER = 1,
  RPLAB_STATUS_INVALID_ARGUMENT = 2,
  RPLAB_STATUS_NOT_APPLICABLE = 3,
  RPLAB_STATUS_TOLERANCE = 4,
  RPLAB_STATUS_DIVERGENT = 5,
  RPLAB_STATUS_NUMERICAL = 6,
  RPLAB_STATUS_IO = 7,
  RPLAB_STATUS_PANIC = 8,
} RplabStatus;

/**
 * Opaque periodized couplings on a torus.
 */
typedef struct RplabCouplings RplabCouplings;

/**
 * Opaque coupling kernel on `Z^d`.
 */
typedef struct RplabKernel RplabKernel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rplab_version(void);

/**
 * Message of the last error on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *rplab_last_error(void);

/**
 * Nearest-neighbour kernel in `dim` dimensions.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum RplabStatus rplab_kernel_nearest_neighbor(size_t dim, struct RplabKernel **out);

/**
 * Yukawa kernel `∝ e^{-μ|x|₁}`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum RplabStatus rplab_kernel_yukawa(size_t dim, double mu, struct RplabKernel **out);

/**
 * Power-law kernel `∝ |x|₁^{-s}`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum RplabStatus rplab_kernel_power_law(size_t dim, double s, struct RplabKernel **out);

/**
 * Releases a kernel. NULL is ignored.
 *
 * # Safety
 * `kernel` must come from an `rplab_kernel_*` constructor and not have
 * been freed already.
 */
void rplab_kernel_free(struct RplabKernel *kernel);

/**
 * Transience integral with the default quadrature. `*finite` is false and
 * `*value` NaN when the walk is recurrent.
 *
 * # Safety
 * `kernel` must be a live handle; `value` and `finite` must be writable.
 */
enum RplabStatus rplab_transience_integral(const struct RplabKernel *kernel,
                                           double *value,
                                           bool *finite);

/**
 * `I_d = ∫ Ĵ²/(1 - Ĵ)`; fails with `Divergent` for recurrent walks.
 *
 * # Safety
 * `kernel` must be a live handle; `value` must be writable.
 */
enum RplabStatus rplab_mean_field_error_integral(const struct RplabKernel *kernel, double *value);

/**
 * Periodizes `kernel` on the torus of even side `side`.
 *
 * # Safety
 * `kernel` must be a live handle; `out` must be valid for a pointer write.
 */
enum RplabStatus rplab_couplings_new(const struct RplabKernel *kernel,
                                     size_t side,
                                     struct RplabCouplings **out);

/**
 * Releases couplings. NULL is ignored.
 *
 * # Safety
 * `couplings` must come from [`rplab_couplings_new`] and not have been
 * freed already.
 */
void rplab_couplings_free(struct RplabCouplings *couplings);

/**
 * Number of torus sites.
 *
 * # Safety
 * `couplings` must be a live handle or NULL (which yields 0).
 */
size_t rplab_couplings_volume(const struct RplabCouplings *couplings);

/**
 * Copies `J_{0,x}` for every site into `values`, which must hold
 * `len >= volume` doubles.
 *
 * # Safety
 * `couplings` must be a live handle; `values` must be writable for `len`
 * doubles.
 */
enum RplabStatus rplab_couplings_values(const struct RplabCouplings *couplings,
                                        double *values,
                                        size_t len);

/**
 * Torus Green's function `G_L(0,0)`.
 *
 * # Safety
 * `couplings` must be a live handle; `value` must be writable.
 */
enum RplabStatus rplab_greens_diagonal(const struct RplabCouplings *couplings, double *value);

/**
 * Peierls certificate for the double-well model with circuit constant `c`.
 *
 * # Safety
 * `passed` and `margin` must be writable.
 */
enum RplabStatus rplab_peierls_certificate(double beta,
                                           double kappa,
                                           double c,
                                           bool *passed,
                                           double *margin);

/**
 * Same certificate as a JSON document. Release the string with
 * [`rplab_string_free`].
 *
 * # Safety
 * `json` must be valid for a pointer write.
 */
enum RplabStatus rplab_peierls_certificate_json(double beta, double kappa, double c, char **json);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void rplab_string_free(char *s);

/**
 * Gradient-model duality point `p_t(κ_O, κ_D)`.
 *
 * # Safety
 * `value` must be writable.
 */
enum RplabStatus rplab_duality_pt(double kappa_o, double kappa_d, double *value);

/**
 * Runs the command-line tool in-process with `argc` NUL-terminated
 * arguments (program name first) and returns its exit code.
 *
 * # Safety
 * `argv` must point to `argc` valid C strings.
 */
int32_t rplab_cli_run(size_t argc, const char *const *argv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RPLAB_H */
