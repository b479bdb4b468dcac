#ifndef TRACEDIST_H
#define TRACEDIST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TdStatus {
  TD_STATUS_OK = 0,
  TD_STATUS_NULL_POINTER = 1,
  TD_STATUS_SHAPE = 2,
  TD_STATUS_DOMAIN = 3,
  TD_STATUS_DEGENERATE = 4,
  TD_STATUS_GAUGE = 5,
  TD_STATUS_DEGENERATE_PAIR = 6,
  TD_STATUS_COST_GUARD = 7,
  TD_STATUS_METRIC_INCONSISTENCY = 8,
  TD_STATUS_LENGTH = 9,
  TD_STATUS_USAGE = 10,
  TD_STATUS_PANIC = 99,
} TdStatus;

/**
 * Opaque Gaussian state handle.
 */
typedef struct TdState TdState;

/**
 * Result of a Lanczos estimate.
 */
typedef struct TdEstimate {
  double value;
  size_t steps_used;
  /**
   * Step at which the Krylov space closed, or -1 if it never did.
   */
  int64_t breakdown_step;
} TdEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *td_last_error(void);

/**
 * Builds a state from means `r` (length 2M) and a row-major covariance `v` (2M x 2M).
 *
 * # Safety
 * `r` must point to `2 * modes` doubles, `v` to `4 * modes * modes` doubles and
 * `out` to writable storage for one pointer.
 */
enum TdStatus td_state_new(double hbar,
                           size_t modes,
                           const double *r,
                           const double *v,
                           struct TdState **out);

/**
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum TdStatus td_state_vacuum(size_t modes, double hbar, struct TdState **out);

/**
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum TdStatus td_state_coherent(double re, double im, double hbar, struct TdState **out);

/**
 * Displaced squeezed state `D(α)S(s)|0⟩`.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum TdStatus td_state_squeezed(double s, double re, double im, double hbar, struct TdState **out);

/**
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum TdStatus td_state_thermal(double nbar, double hbar, struct TdState **out);

/**
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum TdStatus td_state_squashed(double nbar, double hbar, struct TdState **out);

/**
 * New handle holding the state after a loss channel with loss parameter `eta`.
 *
 * # Safety
 * `state` must be a live handle and `out` writable storage for one pointer.
 */
enum TdStatus td_state_loss(const struct TdState *state, double eta, struct TdState **out);

/**
 * Number of modes, or 0 for a null handle.
 *
 * # Safety
 * `state` must be NULL or a live handle.
 */
size_t td_state_num_modes(const struct TdState *state);

/**
 * Copies the means (2M) and row-major covariance (4M²) into caller buffers.
 *
 * # Safety
 * `r` and `v` must hold at least `2M` and `4M²` doubles.
 */
enum TdStatus td_state_moments(const struct TdState *state, double *r, double *v);

/**
 * Releases a handle; NULL is ignored.
 *
 * # Safety
 * `state` must be NULL or a handle not yet freed.
 */
void td_state_free(struct TdState *state);

/**
 * Lanczos estimate of `d(|ψ⟩⟨ψ|, ρ)`; `psi` must be pure.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum TdStatus td_trace_distance_pure_mixed(const struct TdState *psi,
                                           const struct TdState *rho,
                                           size_t steps,
                                           struct TdEstimate *out);

/**
 * Lower bound on `d(ρ₁, ρ₂)` from the Krylov space of the pure `trial`.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum TdStatus td_trace_distance_lower_bound(const struct TdState *rho1,
                                            const struct TdState *rho2,
                                            const struct TdState *trial,
                                            size_t steps,
                                            struct TdEstimate *out);

/**
 * `√(1 − |⟨ψ₁|ψ₂⟩|²)` for two pure states.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum TdStatus td_pure_pure_distance(const struct TdState *a, const struct TdState *b, double *out);

/**
 * `Tr(ρ₁ρ₂⋯ρ_n)` as a complex number.
 *
 * # Safety
 * `states` must point to `n` live handles; `re` and `im` must be writable.
 */
enum TdStatus td_multivariate_trace(const struct TdState *const *states,
                                    size_t n,
                                    double *re,
                                    double *im);

/**
 * Reference value `½ Σ|eig(ρ₁ − ρ₂)|` in a Fock basis truncated at `cutoff` (at most two modes).
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum TdStatus td_fock_trace_distance(const struct TdState *a,
                                     const struct TdState *b,
                                     size_t cutoff,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRACEDIST_H */
