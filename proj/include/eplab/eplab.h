/* C interface to the eplab library. All functions return an eplab_status;
 * on failure eplab_last_error() holds a message for the calling thread.
 * Handles are opaque and owned by the caller once created. */
#ifndef EPLAB_H
#define EPLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum eplab_status {
    EPLAB_OK = 0,
    EPLAB_INVALID_ARGUMENT = 1,
    EPLAB_INVALID_DENSITY = 2,
    EPLAB_STIFFNESS = 3,
    EPLAB_BRACKET_FAILURE = 4,
    EPLAB_DENSITY_BREAKDOWN = 5,
    EPLAB_NUMERICAL_BREAKDOWN = 6,
    EPLAB_INCONCLUSIVE = 7,
    EPLAB_EMPTY_ESTIMATE = 8,
    EPLAB_GRID_MISMATCH = 9,
    EPLAB_OVERFLOW = 10,
    EPLAB_RUN_TOO_SHORT = 11,
    EPLAB_PRECONDITION = 12,
    EPLAB_IO = 13,
    EPLAB_BUFFER_TOO_SMALL = 14,
    EPLAB_INTERNAL = 99
} eplab_status;

typedef struct eplab_init eplab_init;
typedef struct eplab_run eplab_run;
typedef struct eplab_ensemble eplab_ensemble;

const char* eplab_last_error(void);
const char* eplab_status_name(eplab_status status);

/* ---- initial data ---- */

/* preset: "laser", "gaussian_e", "zero". sign applies to the laser pulse only. */
eplab_status eplab_init_preset(const char* preset, double a, double s, double b, double sign, eplab_init** out);
/* Interpolated table of samples (x strictly increasing, n >= 4). */
eplab_status eplab_init_table(const double* x, const double* V, const double* E, size_t n, eplab_init** out);
void eplab_init_free(eplab_init* init);
/* out = {V0, E0, V0', E0', E0''} at x. */
eplab_status eplab_init_eval(const eplab_init* init, double x, double out[5]);

/* ---- criterion ---- */

/* lhs = v0^2 + 2 e0 - 1; rhs = alpha e0'^2 / (1 - e0)^(3 - gamma) (0 when alpha = 0). */
eplab_status eplab_criterion_point(double v0, double e0, double e0p, double alpha, double gamma, double* lhs,
                                   double* rhs);
/* Per-node table (x, v0, e0, lhs, rhs, blowup) written to csv_path (NULL: none). */
eplab_status eplab_criterion_table(const eplab_init* init, double x_min, double x_max, int n_cells, double alpha,
                                   double gamma, const char* csv_path, int* blowup, double* max_margin,
                                   double* argmax_x);
/* Laser amplitude where the max criterion margin crosses zero, bisected on [lo, hi]. */
eplab_status eplab_critical_amplitude(double alpha, double gamma, double lo, double hi, double* a_c);

/* ---- phase plane ---- */

typedef struct eplab_equilibrium {
    double e, v;
    double re[2], im[2];
    char kind[24];
} eplab_equilibrium;

/* EPLAB_BUFFER_TOO_SMALL with *count set when cap is short. */
eplab_status eplab_equilibria(double nu, eplab_equilibrium* out, size_t cap, size_t* count);

typedef struct eplab_separatrix_options {
    double e_min, e_max, v_min, v_max;
    int rays;
    double tolerance;
    double horizon;
    unsigned threads;
} eplab_separatrix_options;

void eplab_separatrix_defaults(eplab_separatrix_options* opts);
/* Writes up to cap points; *count is the full length. EPLAB_BUFFER_TOO_SMALL if cap < count. */
eplab_status eplab_separatrix(double nu, const eplab_separatrix_options* opts, double* e, double* v, size_t cap,
                              size_t* count);
eplab_status eplab_membership(double nu, double v0, double e0, double horizon, int* smooth);

/* ---- characteristics ---- */

typedef struct eplab_integrator_options {
    double rtol, atol, min_step, max_step, blowup_threshold, sample_dt;
} eplab_integrator_options;

void eplab_integrator_defaults(eplab_integrator_options* opts);

typedef struct eplab_trajectory_summary {
    int blew_up;
    double t_star; /* NaN without blow-up */
    char witness[8];
    double t, x, V, E, v, e; /* final state */
} eplab_trajectory_summary;

/* state = {x, V, E, v, e}; samples (t, x, V, E, v, e) go to csv_path when non-NULL. */
eplab_status eplab_characteristic(double nu, const double state[5], double t_end,
                                  const eplab_integrator_options* opts, const char* csv_path,
                                  eplab_trajectory_summary* out);
/* (v0, e0) grid sweep; CSV columns v0, e0, delta, blew_up, t_star. mismatches counts
 * points outside |delta| < band where sign(delta) and the integration disagree (nu = 0 only). */
eplab_status eplab_sweep(double nu, double lo, double hi, int points, double t_end, double band,
                         const eplab_integrator_options* opts, unsigned threads, const char* csv_path,
                         size_t* blowups, size_t* mismatches);

/* ---- Eulerian solver ---- */

typedef struct eplab_solver_config {
    double x_min, x_max;
    int n_cells;
    double cfl, t_end, output_dt;
    int advection; /* 0 upwind, 1 central */
    double filter;
    double nu;
    double nu0, nu_gamma; /* density friction nu0 n^nu_gamma when nu0 > 0 */
    double alpha, gamma_p;
    double mu;
    int exotic_viscosity;
    double kappa, b12;
    int allow_combinations;
    double vx_factor, min_density, max_density, steepness, exotic_threshold;
    long max_steps;
    unsigned threads;
} eplab_solver_config;

void eplab_solver_defaults(eplab_solver_config* cfg);
eplab_status eplab_solve(const eplab_init* init, const eplab_solver_config* cfg, eplab_run** out);
void eplab_run_free(eplab_run* run);

typedef struct eplab_run_summary {
    int blew_up;
    double t_star; /* NaN without blow-up */
    char trigger[16];
    char witness[8];
    size_t snapshots;
    long steps;
    double t_final;
} eplab_run_summary;

eplab_status eplab_run_get_summary(const eplab_run* run, eplab_run_summary* out);
/* Copies snapshot k (V and E, n_cells values each); V or E may be NULL. */
eplab_status eplab_run_snapshot(const eplab_run* run, size_t k, double* t, double* V, double* E, size_t cap);
/* Writes {run_id}_{k}.csv per snapshot plus {run_id}_series.csv, or one {run_id}.json when json != 0. */
eplab_status eplab_run_write(const eplab_run* run, const char* dir, const char* run_id, int json);
eplab_status eplab_run_periodicity(const eplab_run* run, double* defect, double* budget);
/* Residual series (t, residual) to csv_path when non-NULL. */
eplab_status eplab_run_cole_hopf(const eplab_run* run, double mu, double psi_shift, const char* csv_path,
                                 double* max_residual);
/* Criterion against solver; JSON and aligned-text reports when paths are non-NULL. */
eplab_status eplab_reconcile(const eplab_init* init, const eplab_solver_config* cfg, double band,
                             const char* json_path, const char* text_path, int* agree, int* failed);

/* ---- stochastic ---- */

/* f0: "uniform" on [p1, p2] or "gaussian" with mean p1 and sd p2. */
eplab_status eplab_ensemble_create(const eplab_init* init, const char* f0, double p1, double p2, size_t n,
                                   double sigma, uint64_t seed, unsigned threads, eplab_ensemble** out);
eplab_status eplab_ensemble_load(const char* path, eplab_ensemble** out);
void eplab_ensemble_free(eplab_ensemble* ens);
eplab_status eplab_ensemble_advance(eplab_ensemble* ens, double t, double dt, unsigned threads);
eplab_status eplab_ensemble_info(const eplab_ensemble* ens, size_t* n, double* t, double* sigma, uint64_t* seed);
eplab_status eplab_ensemble_save(const eplab_ensemble* ens, const char* path);
/* Moments on a grid (bandwidth <= 0: Silverman); rows (t, x, rho, Vhat, Ehat) appended to
 * csv_path when append != 0, else the file is replaced. */
eplab_status eplab_ensemble_moments(const eplab_ensemble* ens, double x_min, double x_max, int n_cells,
                                    double bandwidth, unsigned threads, const char* csv_path, int append,
                                    double* mass, double* max_rho);

/* Paired-seed convergence of the moments to the deterministic solution. CSV columns
 * sigma, t, err_V, err_E, floor_V, floor_E, corrected_V, corrected_E, reference_valid,
 * finite, max_rho, max_abs_Vhat, max_abs_Ehat. f0 is uniform on [f0_lo, f0_hi]. */
eplab_status eplab_convergence(const eplab_init* init, const double* sigmas, size_t n_sigmas, size_t n,
                               const double* times, size_t n_times, double f0_lo, double f0_hi, double dt,
                               uint64_t seed, double x_min, double x_max, int n_cells, unsigned threads,
                               const char* csv_path);

/* ---- acceptance ---- */

typedef void (*eplab_report_fn)(int id, int pass, const char* line, void* user);
/* suite: "all", "criterion", "friction", "pressure", "viscosity", "stochastic" or "1".."10". */
eplab_status eplab_verify(const char* suite, unsigned threads, const char* scratch, eplab_report_fn report,
                          void* user, int* failures);

#ifdef __cplusplus
}
#endif

#endif
