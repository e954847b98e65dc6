/* clvmap — covariant Lyapunov vector toolkit for planar maps.
 *
 * C API over the C++ core: opaque handles, integer status codes, and plain
 * structs. All functions returning clv_status leave a thread-local message
 * retrievable through clv_last_error() on failure.
 */
#ifndef CLVMAP_H
#define CLVMAP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define CLVMAP_VERSION_STRING "0.1.0"

typedef enum clv_status {
    CLV_OK = 0,
    CLV_ERR_PARAM = 2,   /* invalid argument / usage            */
    CLV_ERR_NUMERIC = 3, /* numeric failure (domain, divergence) */
    CLV_ERR_IO = 4       /* input/output failure                 */
} clv_status;

typedef enum clv_geometry { CLV_GEOM_TORUS = 0, CLV_GEOM_PLANE = 1 } clv_geometry;
typedef enum clv_engine { CLV_ENGINE_SCALAR = 0, CLV_ENGINE_GENERAL = 1 } clv_engine;
typedef enum clv_fp_class {
    CLV_FP_HYPERBOLIC = 0,
    CLV_FP_ELLIPTIC = 1,
    CLV_FP_PARABOLIC = 2
} clv_fp_class;
typedef enum clv_quantity { CLV_QUANTITY_PSI = 0, CLV_QUANTITY_ETA = 1 } clv_quantity;
typedef enum clv_fit_model {
    CLV_FIT_AUTO = 0,
    CLV_FIT_EXPONENTIAL = 1,
    CLV_FIT_POWER_LAW = 2
} clv_fit_model;

typedef struct clv_map clv_map;
typedef struct clv_tangent clv_tangent;
typedef struct clv_hist1 clv_hist1;
typedef struct clv_hist2 clv_hist2;
typedef struct clv_cond1 clv_cond1;
typedef struct clv_field clv_field;

const char* clv_version(void);
const char* clv_last_error(void);

/* ------------------------------------------------------------------ maps */

typedef struct clv_jacobian {
    double a, b, c, d;
    double grad_a[2], grad_b[2], grad_c[2], grad_d[2];
    double det;
} clv_jacobian;

typedef double (*clv_scalar_fn)(double x, void* user);
typedef void (*clv_generic_step_fn)(double x, double y, double out_xy[2], void* user);
typedef void (*clv_generic_jac_fn)(double x, double y, clv_jacobian* out, void* user);

clv_status clv_map_create_ct(double K, clv_geometry geom, clv_map** out);
clv_status clv_map_create_mcmillan_coeffs(double linear, double sine, double cosine,
                                          double quadratic, clv_geometry geom, clv_map** out);
clv_status clv_map_create_mcmillan_cb(clv_scalar_fn f, clv_scalar_fn fprime,
                                      clv_scalar_fn fsecond, void* user, clv_geometry geom,
                                      clv_map** out);
/* inverse may be NULL when no inverse is available. */
clv_status clv_map_create_generic_cb(clv_generic_step_fn forward, clv_generic_step_fn inverse,
                                     clv_generic_jac_fn jac, void* user, clv_geometry geom,
                                     clv_map** out);
clv_status clv_map_create_henon(double a, double b, clv_map** out);
void clv_map_free(clv_map* m);

clv_status clv_map_step(const clv_map* m, double x, double y, double out_xy[2]);
clv_status clv_map_inverse_step(const clv_map* m, double x, double y, double out_xy[2]);
clv_status clv_map_jacobian(const clv_map* m, double x, double y, clv_jacobian* out);
int clv_map_is_mcmillan(const clv_map* m);

typedef struct clv_fixed_point {
    double x, y, trace;
    int cls; /* clv_fp_class */
    double chi_plus_re, chi_plus_im;
    double chi_minus_re, chi_minus_im;
    double lyapunov;
    double slope_plus, slope_minus; /* NaN for elliptic points */
} clv_fixed_point;

clv_status clv_map_fixed_points(const clv_map* m, uint32_t resolution, clv_fixed_point* out,
                                size_t cap, size_t* count);

/* -------------------------------------------------------- scalar kernels */

double clv_slope_step(double psi, double fprime);
double clv_eta_step(double eta, double psi, double fsecond);
double clv_curvature(double psi, double eta);
double clv_log_curvature(double psi, double eta);
double clv_one_step_exponent(double psi);
double clv_expanding_factor(double psi_n, double psi_next);
double clv_direction_angle(double psi);
double clv_splitting_angle(double psi_plus, double psi_minus);

/* -------------------------------------------------------- tangent engine */

typedef struct clv_step_record {
    uint64_t step;
    double x, y, psi, eta, lambda1, log_kappa;
    int sigma;
    int singular;
} clv_step_record;

/* Return nonzero to stop the run early. */
typedef int (*clv_step_sink)(const clv_step_record* rec, void* user);

clv_status clv_tangent_create(const clv_map* m, clv_engine engine, double x0, double y0,
                              double psi0, int sigma0, double eta0, clv_tangent** out);
clv_status clv_tangent_create_seeded(const clv_map* m, clv_engine engine, double x0, double y0,
                                     uint64_t seed, clv_tangent** out);
clv_status clv_tangent_run(clv_tangent* t, uint64_t steps, clv_step_sink sink, void* user);

typedef struct clv_tangent_state {
    double x, y, psi, eta;
    int sigma;
    double ftle_sum_log;
    uint64_t ftle_steps;
    uint64_t singular_events;
} clv_tangent_state;

clv_status clv_tangent_state_get(const clv_tangent* t, clv_tangent_state* out);
void clv_tangent_free(clv_tangent* t);

/* ------------------------------------------------- matched-slope streams */

typedef struct clv_observable_record {
    uint64_t step;
    double x, y, psi_plus, psi_minus, eta, theta, lambda1, log_kappa;
    int sigma;
    int singular_plus, singular_minus, tangency;
} clv_observable_record;

typedef int (*clv_observable_sink)(const clv_observable_record* rec, void* user);

typedef struct clv_observable_options {
    uint64_t steps;
    uint64_t transient; /* UINT64_MAX -> automatic */
    uint64_t window;
    uint64_t overlap;
    uint64_t seed;
} clv_observable_options;

typedef struct clv_observable_summary {
    uint64_t emitted, transient_used, singular_plus, singular_minus, tangencies;
    double ftle_sum_log;
    uint64_t ftle_steps, ftle_singular;
} clv_observable_summary;

clv_status clv_observables_run(const clv_map* m, double x0, double y0,
                               const clv_observable_options* opt, clv_observable_sink sink,
                               void* user, clv_observable_summary* out_summary);

/* ---------------------------------------------------------- approximants */

clv_status clv_preimage_chain(const clv_map* m, double x, double y, uint32_t order,
                              double* out_y, size_t cap);
clv_status clv_cf_slope(const clv_map* m, double x, double y, uint32_t order, double* out,
                        int* truncation_singular);
double clv_series_weight_bound(double lambda, uint32_t order, double fprime_max);

/* --------------------------------------------------------------- oracles */

clv_status clv_benettin_ftle(const clv_map* m, double x0, double y0, uint64_t steps, double wx,
                             double wy, double* out);
clv_status clv_clv_directions(const clv_map* m, double x, double y, uint64_t warmup,
                              double* out_psi_plus, double* out_psi_minus);
clv_status clv_fd_curvature(const double* xs, const double* ys, size_t n, double* out);

/* ------------------------------------------------------------- ensembles */

typedef struct clv_decay_fit {
    int model; /* clv_fit_model of the chosen fit */
    double rate;
    double residual;
    size_t window_first, window_last;
} clv_decay_fit;

clv_status clv_ensemble_decay(const clv_map* m, double x0, double y0, clv_quantity quantity,
                              uint32_t members, uint64_t steps, const uint64_t* sample_times,
                              size_t n_samples, uint64_t seed, uint32_t workers,
                              double* out_spread, uint64_t* out_singular);
clv_status clv_decay_fit_series(const double* times, const double* spread, size_t n,
                                clv_fit_model model, clv_decay_fit* out);
/* Fitted-window policy applied before fitting (half-initial to epsilon floor). */
clv_status clv_decay_fit_windowed(const double* times, const double* spread, size_t n,
                                  clv_fit_model model, clv_decay_fit* out);

/* ---------------------------------------------------- histograms, fields */

clv_status clv_hist1_create(double lo, double hi, uint32_t bins, clv_hist1** out);
void clv_hist1_free(clv_hist1* h);
clv_status clv_hist1_add(clv_hist1* h, double value);
clv_status clv_hist1_merge(clv_hist1* h, const clv_hist1* other);
uint32_t clv_hist1_bins(const clv_hist1* h);
double clv_hist1_bin_left(const clv_hist1* h, uint32_t i);
double clv_hist1_bin_right(const clv_hist1* h, uint32_t i);
uint64_t clv_hist1_count(const clv_hist1* h, uint32_t i);
uint64_t clv_hist1_underflow(const clv_hist1* h);
uint64_t clv_hist1_overflow(const clv_hist1* h);
uint64_t clv_hist1_non_finite(const clv_hist1* h);
uint64_t clv_hist1_total(const clv_hist1* h);
clv_status clv_hist1_l1_distance(const clv_hist1* a, const clv_hist1* b, double* out);

clv_status clv_hist2_create(double x_lo, double x_hi, uint32_t x_bins, double y_lo, double y_hi,
                            uint32_t y_bins, clv_hist2** out);
void clv_hist2_free(clv_hist2* h);
clv_status clv_hist2_add(clv_hist2* h, double x, double y);
clv_status clv_hist2_merge(clv_hist2* h, const clv_hist2* other);
uint32_t clv_hist2_x_bins(const clv_hist2* h);
uint32_t clv_hist2_y_bins(const clv_hist2* h);
uint64_t clv_hist2_count(const clv_hist2* h, uint32_t i, uint32_t j);
uint64_t clv_hist2_total(const clv_hist2* h);
uint64_t clv_hist2_out_of_range(const clv_hist2* h);
uint64_t clv_hist2_non_finite(const clv_hist2* h);

clv_status clv_cond1_create(double lo, double hi, uint32_t bins, clv_cond1** out);
void clv_cond1_free(clv_cond1* c);
clv_status clv_cond1_add(clv_cond1* c, double lambda1, double value);
const clv_hist1* clv_cond1_positive(const clv_cond1* c);
const clv_hist1* clv_cond1_negative(const clv_cond1* c);
uint64_t clv_cond1_zero_bucket(const clv_cond1* c);

clv_status clv_field_create(double x_lo, double x_hi, double y_lo, double y_hi, uint32_t nx,
                            uint32_t ny, clv_field** out);
clv_status clv_field_create_torus(uint32_t nx, uint32_t ny, clv_field** out);
void clv_field_free(clv_field* f);
clv_status clv_field_add(clv_field* f, double x, double y, double value);
clv_status clv_field_merge(clv_field* f, const clv_field* other);
uint32_t clv_field_nx(const clv_field* f);
uint32_t clv_field_ny(const clv_field* f);
double clv_field_mean(const clv_field* f, uint32_t i, uint32_t j);
uint64_t clv_field_count(const clv_field* f, uint32_t i, uint32_t j);

/* Splitting angles from a square cell-averaged unstable-slope field and its
 * transpose. cell_status: 0 = value, 1 = empty, 2 = tangency. Buffers must
 * hold nx*nx entries. */
clv_status clv_grid_theta(const clv_field* psi_plus, double* theta_out, uint8_t* cell_status_out,
                          size_t cap);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CLVMAP_H */
