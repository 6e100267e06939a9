#ifndef BTRELAX_H
#define BTRELAX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BtrStatus {
  BTR_STATUS_OK = 0,
  BTR_STATUS_NULL_POINTER = 1,
  BTR_STATUS_INVALID_ARGUMENT = 2,
  // Blow-up, clip budget, step too large or positivity loss.
  BTR_STATUS_NUMERICAL = 3,
  BTR_STATUS_PANIC = 4,
} BtrStatus;

typedef struct BtrGrid BtrGrid;

typedef struct BtrParams BtrParams;

typedef struct BtrState BtrState;

// Scalar diagnostics of one state; per-species entries are summed.
typedef struct BtrDiagnostics {
  double time;
  double energy;
  double entropy;
  double h1;
  double h2;
  double mass_total;
  double d_relax;
  double d_visc;
  double d_lin;
  double d_quartic;
  double d_grad;
  double d_bohm_total;
} BtrDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *btr_last_error_message(void);

// Create a periodic grid with `n^dim` points on `[0, 2π)^dim`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum BtrStatus btr_grid_new(size_t dim, size_t n, struct BtrGrid **out);

// Number of grid points, `n^dim`; 0 for a null handle.
//
// # Safety
// `grid` must be null or a live handle from [`btr_grid_new`].
size_t btr_grid_len(const struct BtrGrid *grid);

// # Safety
// `grid` must be null or a handle from [`btr_grid_new`] not yet freed.
void btr_grid_free(struct BtrGrid *grid);

// Create parameters for `n_species` species. A negative `delta` selects the
// default `min(10⁻³, eps)`.
//
// # Safety
// `k` must point to `n_species` readable values and `out` to writable storage
// for one handle.
enum BtrStatus btr_params_new(double eps,
                              double delta,
                              const double *k,
                              size_t n_species,
                              struct BtrParams **out);

// Attach a row-major `n_species × n_species` coefficient matrix (symmetric,
// nonnegative) for the generalized limit system.
//
// # Safety
// `params` must be a live handle and `entries` must point to
// `n_species²` readable values.
enum BtrStatus btr_params_set_matrix(struct BtrParams *params, const double *entries);

// # Safety
// `params` must be null or a handle from [`btr_params_new`] not yet freed.
void btr_params_free(struct BtrParams *params);

// Create a state. `rho` holds `n_species` density arrays of `n^dim` values
// each; `u` holds `n_species · dim` velocity arrays in the order species,
// then component, or is null for a state at rest. Arrays are row-major.
//
// # Safety
// `grid` must be live; `rho` and (if non-null) `u` must point to the stated
// number of readable values; `out` must be writable.
enum BtrStatus btr_state_new(const struct BtrGrid *grid,
                             size_t n_species,
                             double time,
                             const double *rho,
                             const double *u,
                             struct BtrState **out);

// # Safety
// `state` must be null or a handle not yet freed.
void btr_state_free(struct BtrState *state);

// Time of a state; NaN for a null handle.
//
// # Safety
// `state` must be null or a live handle.
double btr_state_time(const struct BtrState *state);

// Copy the density of `species` into `buf`, which holds `len` values.
//
// # Safety
// `state` must be live and `buf` must point to `len` writable values.
enum BtrStatus btr_state_density(const struct BtrState *state,
                                 size_t species,
                                 double *buf,
                                 size_t len);

// Copy velocity component `component` of `species` into `buf`.
//
// # Safety
// `state` must be live and `buf` must point to `len` writable values.
enum BtrStatus btr_state_velocity(const struct BtrState *state,
                                  size_t species,
                                  size_t component,
                                  double *buf,
                                  size_t len);

// Energy `½∫ρ̄² + (ε/2)Σ∫ρ_i|u_i|² + εΣ∫|∇√ρ_i|²`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum BtrStatus btr_energy(const struct BtrState *state,
                          const struct BtrParams *params,
                          double *out);

// Entropy `Σ k_i^{-1}∫ρ_i(log ρ_i − 1)`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum BtrStatus btr_entropy(const struct BtrState *state,
                           const struct BtrParams *params,
                           double *out);

// # Safety
// Handles must be live; `out` must be writable.
enum BtrStatus btr_diagnostics(const struct BtrState *state,
                               const struct BtrParams *params,
                               struct BtrDiagnostics *out);

// Advance the relaxed system by `dt`; `scheme` is 1 or 2 for the first- or
// second-order IMEX method. The result is a new handle in `out`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum BtrStatus btr_nsk_step(const struct BtrState *state,
                            const struct BtrParams *params,
                            double dt,
                            uint32_t scheme,
                            struct BtrState **out);

// Advance the limit system by `dt`: with `a_ij = k_i`, or with the matrix
// set by [`btr_params_set_matrix`] when one is attached.
//
// # Safety
// Handles must be live; `out` must be writable.
enum BtrStatus btr_bt_step(const struct BtrState *state,
                           const struct BtrParams *params,
                           double dt,
                           struct BtrState **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BTRELAX_H */
