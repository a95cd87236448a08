#ifndef CAUSAL_GEOMETRY_H
#define CAUSAL_GEOMETRY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CgStatus {
  CG_STATUS_OK = 0,
  CG_STATUS_NULL_POINTER = 1,
  CG_STATUS_INVALID_ARGUMENT = 2,
  CG_STATUS_NUMERIC = 3,
  CG_STATUS_PANIC = 4,
} CgStatus;

typedef enum CgMethod {
  CG_METHOD_QUADRATURE = 0,
  CG_METHOD_MONTE_CARLO = 1,
  CG_METHOD_GEOMETRIC = 2,
  CG_METHOD_DIMMER_APPROX = 3,
} CgMethod;

typedef enum CgSubmanifold {
  CG_SUBMANIFOLD_A = 0,
  CG_SUBMANIFOLD_B = 1,
} CgSubmanifold;

typedef enum CgProfile {
  CG_PROFILE_LINEAR = 0,
  CG_PROFILE_QUADRATIC = 1,
  CG_PROFILE_EXPONENTIAL = 2,
} CgProfile;

/**
 * Opaque dimmer or binary-switch model.
 */
typedef struct CgDimmer CgDimmer;

/**
 * Opaque two-species model.
 */
typedef struct CgTwoSpecies CgTwoSpecies;

/**
 * EI estimate; optional fields are NaN when absent.
 */
typedef struct CgReport {
  double nats;
  double bits;
  enum CgMethod method;
  double volume_term;
  double mean_mismatch;
  double std_error;
  size_t warning_count;
} CgReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the next failing call.
 */
const char *cg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cg_version(void);

/**
 * `l = ½[ln det(g+h) − ln det g]` for row-major `d×d` matrices.
 *
 * # Safety
 * `g` and `h` must point to `d*d` doubles; `out_l` must be writable.
 */
enum CgStatus cg_mismatch(const double *g, const double *h, size_t d, double *out_l);

/**
 * Generalized eigenvalues of `(g, h)`, written in descending order to `out_eigenvalues[0..d]`.
 *
 * # Safety
 * `g`, `h` must point to `d*d` doubles and `out_eigenvalues` to `d` writable doubles.
 */
enum CgStatus cg_causal_eigenvalues(const double *g,
                                    const double *h,
                                    size_t d,
                                    double *out_eigenvalues);

/**
 * Builds a two-species model. `a` is the row-major 2×2 intervention matrix.
 *
 * # Safety
 * `a` must point to 4 doubles; `out_model` must be writable.
 */
enum CgStatus cg_two_species_new(const double *a,
                                 double delta_t,
                                 size_t n_points,
                                 double epsilon,
                                 double delta,
                                 struct CgTwoSpecies **out_model);

/**
 * # Safety
 * `model` must come from [`cg_two_species_new`] and not be used afterwards. NULL is ignored.
 */
void cg_two_species_free(struct CgTwoSpecies *model);

/**
 * EI_g of the full model on a midpoint grid.
 *
 * # Safety
 * `model` must be a live handle; `out_report` must be writable.
 */
enum CgStatus cg_two_species_ei_geometric(const struct CgTwoSpecies *model,
                                          size_t nodes_per_axis,
                                          struct CgReport *out_report);

/**
 * EI_g of the coarse-grained model on submanifold A or B.
 *
 * # Safety
 * `model` must be a live handle; `out_report` must be writable.
 */
enum CgStatus cg_two_species_coarse_ei(const struct CgTwoSpecies *model,
                                       enum CgSubmanifold sub,
                                       size_t nodes_per_axis,
                                       struct CgReport *out_report);

/**
 * Exact EI by seeded nested Monte Carlo.
 *
 * # Safety
 * `model` must be a live handle; `out_report` must be writable.
 */
enum CgStatus cg_two_species_ei_mc(const struct CgTwoSpecies *model,
                                   size_t outer_samples,
                                   size_t inner_samples,
                                   uint64_t seed,
                                   struct CgReport *out_report);

/**
 * Eigenvalues of `h⁻¹g` at `theta[0..2]` (descending) and the mismatch there.
 *
 * # Safety
 * `theta` must point to 2 doubles, `out_eigenvalues` to 2 writable doubles, `out_mismatch` to one.
 */
enum CgStatus cg_two_species_eigen(const struct CgTwoSpecies *model,
                                   const double *theta,
                                   double *out_eigenvalues,
                                   double *out_mismatch);

/**
 * Row-major effect metric `g(θ)` written to `out_g[0..4]`.
 *
 * # Safety
 * `theta` must point to 2 doubles and `out_g` to 4 writable doubles.
 */
enum CgStatus cg_two_species_effect_metric(const struct CgTwoSpecies *model,
                                           const double *theta,
                                           double *out_g);

/**
 * Dimmer with constant effect error. `a` is used only by the exponential profile.
 *
 * # Safety
 * `out_model` must be writable.
 */
enum CgStatus cg_dimmer_new(enum CgProfile profile,
                            double a,
                            double epsilon,
                            double delta,
                            struct CgDimmer **out_model);

/**
 * The linear dimmer restricted to the interventions {0, 1}.
 *
 * # Safety
 * `out_model` must be writable.
 */
enum CgStatus cg_binary_switch_new(double epsilon, double delta, struct CgDimmer **out_model);

/**
 * # Safety
 * `model` must come from a dimmer constructor and not be used afterwards. NULL is ignored.
 */
void cg_dimmer_free(struct CgDimmer *model);

/**
 * Exact EI by nested quadrature (`nodes_per_axis` 0 selects the default).
 *
 * # Safety
 * `model` must be a live handle; `out_report` must be writable.
 */
enum CgStatus cg_dimmer_ei_exact(const struct CgDimmer *model,
                                 size_t nodes_per_axis,
                                 struct CgReport *out_report);

/**
 * Small-error approximation of the dimmer EI.
 *
 * # Safety
 * `model` must be a live handle; `out_report` must be writable.
 */
enum CgStatus cg_dimmer_ei_approx(const struct CgDimmer *model, struct CgReport *out_report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAUSAL_GEOMETRY_H */
