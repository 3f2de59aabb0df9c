/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the vougc library: Granger-causality rates of vector
 * Ornstein-Uhlenbeck models, and local causality maps of Langevin systems.
 *
 * Conventions
 *   - Every object is an opaque handle released by its *_free function.
 *     Passing NULL to a *_free function is a no-op.
 *   - Functions that can fail return vougc_status; on failure the message
 *     is available from vougc_last_error() on the same thread.
 *   - Matrices are dense, row-major. Variable indices are 0-based.
 *   - Handles are immutable after creation and may be shared between
 *     threads for reading.
 */
#ifndef VOUGC_VOUGC_H
#define VOUGC_VOUGC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(VOUGC_BUILDING_LIBRARY)
#    define VOUGC_API __declspec(dllexport)
#  else
#    define VOUGC_API __declspec(dllimport)
#  endif
#else
#  define VOUGC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status values double as process exit codes in the command-line tool. */
typedef enum vougc_status {
  VOUGC_OK = 0,
  VOUGC_ERR_PARSE = 2,      /* malformed or semantically invalid document */
  VOUGC_ERR_VALIDATION = 3, /* bad arguments, dimensions, unsupported request */
  VOUGC_ERR_SOLVER = 4,     /* matrix equation without (stabilising) solution */
  VOUGC_ERR_NUMERICAL = 5,  /* numerical degeneracy, insufficient coverage */
  VOUGC_ERR_DIVERGENCE = 6, /* trajectory overflow */
  VOUGC_ERR_INTERNAL = 70
} vougc_status;

enum {
  VOUGC_FLAG_DETECTABLE = 1,
  VOUGC_FLAG_SOURCE_DECOUPLED = 2,
  VOUGC_FLAG_MARGINAL = 4
};

typedef enum vougc_analysis {
  VOUGC_ANALYSIS_GRAPH = 0,
  VOUGC_ANALYSIS_UNCONDITIONAL_GRAPH = 1,
  VOUGC_ANALYSIS_RATE = 2,
  VOUGC_ANALYSIS_STABILITY = 3
} vougc_analysis;

typedef struct vougc_model vougc_model;
typedef struct vougc_result vougc_result;
typedef struct vougc_graph vougc_graph;
typedef struct vougc_convergence vougc_convergence;
typedef struct vougc_system vougc_system;
typedef struct vougc_trajectory vougc_trajectory;
typedef struct vougc_map vougc_map;

/* Target, conditioning and source index sets; together they must cover
 * 0..n-1 exactly once, each list strictly increasing. */
typedef struct vougc_partition {
  const size_t* target;
  size_t n_target;
  const size_t* cond;
  size_t n_cond;
  const size_t* source;
  size_t n_source;
} vougc_partition;

VOUGC_API const char* vougc_version(void);
/* Algorithm name of the generator used for stochastic trajectories. */
VOUGC_API const char* vougc_rng_name(void);
/* Message of the last failure on this thread ("" if none). */
VOUGC_API const char* vougc_last_error(void);
/* Short machine-readable reason of the last failure, e.g. "no-solution". */
VOUGC_API const char* vougc_last_error_kind(void);
VOUGC_API void vougc_string_free(char* s);

/* ---- models ---------------------------------------------------------- */

VOUGC_API vougc_status vougc_model_create(size_t n, const double* a, const double* sigma,
                                          vougc_model** out);
VOUGC_API vougc_status vougc_model_parse(const char* text, size_t len, vougc_model** out);
/* Text form that parses back to a bitwise identical model. */
VOUGC_API vougc_status vougc_model_dump(const vougc_model* m, char** out);
/* Same drift, Sigma multiplied by nu. */
VOUGC_API vougc_status vougc_model_scaled(const vougc_model* m, double nu, vougc_model** out);
VOUGC_API size_t vougc_model_dim(const vougc_model* m);
/* Copies A and/or Sigma (n*n each); either pointer may be NULL. */
VOUGC_API void vougc_model_get(const vougc_model* m, double* a, double* sigma);
VOUGC_API void vougc_model_free(vougc_model* m);

/* ---- rates ----------------------------------------------------------- */

VOUGC_API vougc_status vougc_rate_conditional(const vougc_model* m, const vougc_partition* p,
                                              int force_hamiltonian, vougc_result** out);
/* Rate from source to target with every other variable auxiliary. */
VOUGC_API vougc_status vougc_rate_unconditional(const vougc_model* m, const size_t* target,
                                                size_t n_target, const size_t* source,
                                                size_t n_source, vougc_result** out);
VOUGC_API double vougc_result_rate(const vougc_result* r);
VOUGC_API double vougc_result_te_rate(const vougc_result* r);
VOUGC_API unsigned vougc_result_flags(const vougc_result* r);
VOUGC_API double vougc_result_closed_loop_max_re(const vougc_result* r);
VOUGC_API double vougc_result_residual(const vougc_result* r);
/* Riccati solution P33 (m x m). Returns m; copies when cap >= m*m. m is 0
 * when the source is decoupled. */
VOUGC_API size_t vougc_result_p33(const vougc_result* r, double* out, size_t cap);
/* Kalman gain; returns rows*cols and copies when cap is large enough. */
VOUGC_API size_t vougc_result_gain(const vougc_result* r, double* out, size_t cap, size_t* rows,
                                   size_t* cols);
VOUGC_API void vougc_result_free(vougc_result* r);

/* Finite-horizon causality F(h) from exact prediction-error covariances. */
VOUGC_API vougc_status vougc_finite_horizon(const vougc_model* m, const vougc_partition* p,
                                            double h, double* out);
/* F(dt)/dt of the sampled VAR(1); requires Hurwitz-stable A. */
VOUGC_API vougc_status vougc_rate_via_subsampling(const vougc_model* m, const vougc_partition* p,
                                                  double dt, double* out);
VOUGC_API vougc_status vougc_convergence_check(const vougc_model* m, const vougc_partition* p,
                                               const double* dts, size_t count,
                                               vougc_convergence** out);
VOUGC_API size_t vougc_convergence_rows(const vougc_convergence* c);
VOUGC_API void vougc_convergence_row(const vougc_convergence* c, size_t k, double* dt,
                                     double* estimate, double* analytic, double* rel_error);
/* Least-squares slope of log|error| against log dt; NaN if undetermined. */
VOUGC_API double vougc_convergence_slope(const vougc_convergence* c);
VOUGC_API void vougc_convergence_free(vougc_convergence* c);

/* ---- graphs ---------------------------------------------------------- */

VOUGC_API vougc_status vougc_graph_pairwise(const vougc_model* m, vougc_graph** out);
VOUGC_API vougc_status vougc_graph_unconditional(const vougc_model* m, vougc_graph** out);
VOUGC_API size_t vougc_graph_dim(const vougc_graph* g);
/* Causality from j to i; NaN on the diagonal and for failed cells. */
VOUGC_API double vougc_graph_rate(const vougc_graph* g, size_t i, size_t j);
/* Failure reason of a cell, "" when defined, "diagonal" on the diagonal. */
VOUGC_API const char* vougc_graph_reason(const vougc_graph* g, size_t i, size_t j);
VOUGC_API void vougc_graph_free(vougc_graph* g);

/* ---- Langevin systems ------------------------------------------------ */

VOUGC_API vougc_status vougc_system_parse(const char* text, size_t len, vougc_system** out);
VOUGC_API vougc_status vougc_system_lorenz(double sigma, double rho, double beta, double nu,
                                           vougc_system** out);
/* f(y) = A y with the model's Sigma as constant diffusion. */
VOUGC_API vougc_status vougc_system_linear(const vougc_model* m, vougc_system** out);
VOUGC_API size_t vougc_system_dim(const vougc_system* s);
VOUGC_API vougc_status vougc_system_drift(const vougc_system* s, const double* y, double* f);
/* Local VOU model at y; the remaining outputs may be NULL. */
VOUGC_API vougc_status vougc_linearize(const vougc_system* s, const double* y, vougc_model** out,
                                       double* det_j, double* lambda, int* singular);
VOUGC_API void vougc_system_free(vougc_system* s);

/* ---- trajectories ---------------------------------------------------- */

/* substeps <= 0 selects the default (10 per sampling interval). */
VOUGC_API vougc_status vougc_integrate_ode(const vougc_system* s, const double* y0,
                                           double duration, double dt, double transient,
                                           int substeps, vougc_trajectory** out);
VOUGC_API vougc_status vougc_integrate_sde(const vougc_system* s, const double* y0,
                                           double duration, double dt, double transient,
                                           uint64_t seed, int substeps, vougc_trajectory** out);
VOUGC_API size_t vougc_trajectory_length(const vougc_trajectory* t);
VOUGC_API size_t vougc_trajectory_dim(const vougc_trajectory* t);
VOUGC_API double vougc_trajectory_time(const vougc_trajectory* t, size_t k);
/* Row-major length x dim block, valid until the trajectory is freed. */
VOUGC_API const double* vougc_trajectory_states(const vougc_trajectory* t);
VOUGC_API void vougc_trajectory_free(vougc_trajectory* t);

/* ---- maps ------------------------------------------------------------ */

/* points: row-major count x n. partition is required for
 * VOUGC_ANALYSIS_RATE and ignored otherwise. threads == 0 reads
 * VOUGC_THREADS or uses the hardware concurrency. */
VOUGC_API vougc_status vougc_map_points(const vougc_system* s, const double* points, size_t count,
                                        vougc_analysis analysis, const vougc_partition* p,
                                        unsigned threads, vougc_map** out);
VOUGC_API vougc_status vougc_map_trajectory(const vougc_system* s, const vougc_trajectory* t,
                                            vougc_analysis analysis, const vougc_partition* p,
                                            unsigned threads, vougc_map** out);
VOUGC_API size_t vougc_map_size(const vougc_map* m);
VOUGC_API size_t vougc_map_dim(const vougc_map* m);
/* Returns 1 when the sample is complete (usable for averaging). */
VOUGC_API int vougc_map_sample(const vougc_map* m, size_t k, double* lambda, double* det_j,
                               int* singular);
/* Coordinates of sample k (dim values), valid until the map is freed. */
VOUGC_API const double* vougc_map_point(const vougc_map* m, size_t k);
VOUGC_API const char* vougc_map_error(const vougc_map* m, size_t k);
/* Graph cell (j -> i) of sample k; NaN when undefined. */
VOUGC_API double vougc_map_value(const vougc_map* m, size_t k, size_t i, size_t j);
/* Rate of sample k for VOUGC_ANALYSIS_RATE; NaN when the sample failed. */
VOUGC_API double vougc_map_rate(const vougc_map* m, size_t k);
/* Equal-weight averages over complete samples: n*n values (NaN diagonal)
 * for graph analyses, one value for rates. Outputs are filled whenever any
 * sample is usable; VOUGC_ERR_NUMERICAL is returned when more than 1% of
 * samples were excluded. */
VOUGC_API vougc_status vougc_map_global(const vougc_map* m, double* values, size_t* excluded,
                                        double* excluded_fraction);
VOUGC_API void vougc_map_free(vougc_map* m);

#ifdef __cplusplus
}
#endif

#endif /* VOUGC_VOUGC_H */
