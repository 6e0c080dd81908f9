#ifndef RCHWAVE_H
#define RCHWAVE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum RchStatus {
  RchStatus_Ok = 0,
  RchStatus_NullPointer = 1,
  RchStatus_InvalidArgument = 2,
  RchStatus_NoConvergence = 3,
  RchStatus_NumericalFailure = 4,
  RchStatus_BufferTooSmall = 5,
  RchStatus_Panic = 6,
} RchStatus;

typedef enum RchDecision {
  RchDecision_SpectrallyStable = 0,
  RchDecision_Inconclusive = 1,
  RchDecision_FlaggedFold = 2,
} RchDecision;

typedef enum RchCriterion {
  RchCriterion_DePositive = 0,
  RchCriterion_DcDa = 1,
  RchCriterion_None = 2,
} RchCriterion;

/**
 * Opaque converged wave.
 */
typedef struct RchWave RchWave;

/**
 * Scalars of a wave.
 */
typedef struct RchScalars {
  double c;
  double omega;
  /**
   * Integration constant of the profile equation.
   */
  double a_const;
  double mass;
  double energy;
  double momentum;
  double max_phi;
  /**
   * `min(c - φ)`.
   */
  double min_gap;
  double residual_norm;
  /**
   * Number of grid points of the profile.
   */
  uintptr_t grid_len;
} RchScalars;

/**
 * Stability verdict with the scalars it rests on.
 */
typedef struct RchVerdict {
  enum RchDecision decision;
  enum RchCriterion criterion;
  uint32_t n_l;
  uint32_t z_l;
  uint32_t n_lpi;
  uint32_t z_lpi;
  double theta;
  double d_c;
  double da_dc;
  double de_dc;
  double det_a0;
  double inner_l_inv_1_1;
} RchVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *rch_last_error(void);

/**
 * Computes the wave of speed `c` at drift `omega` on `n_modes` Fourier modes.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum RchStatus rch_wave_new(double omega,
                            double c,
                            uint32_t n_modes,
                            double tol,
                            struct RchWave **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `w` must come from [`rch_wave_new`] and not have been freed.
 */
void rch_wave_free(struct RchWave *w);

/**
 * # Safety
 * `w` must be a live handle and `out` valid for one write.
 */
enum RchStatus rch_wave_scalars(const struct RchWave *w, struct RchScalars *out);

/**
 * Copies the profile on the uniform grid `x_j = 2πj/len` into `buf`.
 * `written` receives the grid length, also when the buffer is too small.
 *
 * # Safety
 * `w` must be a live handle, `buf` valid for `len` writes, `written` for one.
 */
enum RchStatus rch_wave_profile(const struct RchWave *w,
                                double *buf,
                                uintptr_t len,
                                uintptr_t *written);

/**
 * Runs the full stability analysis of a wave.
 *
 * # Safety
 * `w` must be a live handle and `out` valid for one write.
 */
enum RchStatus rch_wave_analyze(const struct RchWave *w, struct RchVerdict *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RCHWAVE_H */
