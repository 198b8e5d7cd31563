/* riskreg C API.
 *
 * Every function returns an rr_status. On failure a message is kept per
 * thread and can be read with rr_last_error() until the next failing call.
 * Strings returned through char** are owned by the caller and released with
 * rr_string_free().
 */
#ifndef RISKREG_H
#define RISKREG_H

#include <stddef.h>
#include <stdint.h>

#if defined(RISKREG_BUILDING_LIBRARY)
#define RR_API __attribute__((visibility("default")))
#else
#define RR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rr_status {
  RR_OK = 0,
  RR_ERR_INPUT = 2,
  RR_ERR_DEGENERATE = 3,
  RR_ERR_CONVERGENCE = 4,
  RR_ERR_INTERNAL = 5
} rr_status;

typedef enum rr_vector {
  RR_VECTOR_F_TRUE = 0,
  RR_VECTOR_G_TRUE = 1,
  RR_VECTOR_G = 2 /* noisy data */
} rr_vector;

/* A problem instance plus at most one noisy data vector. */
typedef struct rr_problem rr_problem;
/* Rule, grid and solver parameters. */
typedef struct rr_options rr_options;

RR_API const char* rr_version(void);
RR_API const char* rr_last_error(void);
RR_API void rr_string_free(char* s);

/* variant < 0 selects the problem's default variant. */
RR_API rr_status rr_problem_create(const char* name, int variant, int64_t n, rr_problem** out);
/* Dense column-major A. g_true defaults to A f_true; f_true may be NULL when
 * g_true is given. */
RR_API rr_status rr_problem_from_dense(const char* name, int64_t rows, int64_t cols,
                                       const double* a, const double* f_true,
                                       const double* g_true, rr_problem** out);
RR_API rr_status rr_problem_load(const char* path, rr_problem** out);
RR_API void rr_problem_free(rr_problem* p);

RR_API rr_status rr_problem_save(const rr_problem* p, const char* path);
RR_API rr_status rr_problem_dims(const rr_problem* p, int64_t* rows, int64_t* cols);
/* Copies the vector into buf, which must hold len entries. */
RR_API rr_status rr_problem_vector(const rr_problem* p, rr_vector which, double* buf, int64_t len);
/* JSON: name, variant, n, m, has_f_true, has_data, rho (= ||g_true||), and
 * sigma, xi, seed, replicate when noisy data is present. */
RR_API rr_status rr_problem_info(const rr_problem* p, char** json_out);

/* Replaces the noisy data with a draw at SNR xi (dB) from stream (seed, replicate). */
RR_API rr_status rr_problem_add_noise(rr_problem* p, double xi, uint64_t seed, uint64_t replicate);
RR_API rr_status rr_problem_add_noise_sigma(rr_problem* p, double sigma, uint64_t seed,
                                            uint64_t replicate);
/* Installs caller data; sigma < 0 means unknown. */
RR_API rr_status rr_problem_set_data(rr_problem* p, const double* g, int64_t len, double sigma);

RR_API rr_status rr_options_create(rr_options** out);
RR_API void rr_options_free(rr_options* o);
RR_API rr_status rr_options_set_sigma(rr_options* o, double sigma);
RR_API rr_status rr_options_set_rho2(rr_options* o, double rho2);
/* Absolute grid; min <= 0 or max <= 0 keeps the default relative range. */
RR_API rr_status rr_options_set_grid(rr_options* o, double min, double max, int points);
RR_API rr_status rr_options_set_matrix_free(rr_options* o, int enabled);
RR_API rr_status rr_options_set_probes(rr_options* o, int probes);
RR_API rr_status rr_options_set_seed(rr_options* o, uint64_t seed);
RR_API rr_status rr_options_set_solve_tol(rr_options* o, double tol);
/* PRO with estimated rho^2: fall back to the largest grid alpha instead of
 * failing when the estimate is not positive. */
RR_API rr_status rr_options_set_pro_fallback(rr_options* o, int enabled);
RR_API rr_status rr_options_set_bp(rr_options* o, double gamma, double c);
/* alpha_init <= 0 keeps the grid midpoint. */
RR_API rr_status rr_options_set_ipro(rr_options* o, double alpha_init, double eps, int max_iter);

/* Selection JSON for rule pro, ipro, dp, upre, bp, gcv, lc or qoc on the
 * problem's noisy data. */
RR_API rr_status rr_select(const rr_problem* p, const char* rule, const rr_options* o,
                           char** json_out);
/* CSV of curve predictive, lower_bound, upre, gcv or lcurve. */
RR_API rr_status rr_curve(const rr_problem* p, const char* kind, const rr_options* o,
                          char** csv_out);

/* Parses and validates a study config without running it. */
RR_API rr_status rr_study_validate(const char* config_json);
/* Runs the study and writes its CSV files into out_dir. The manifest is a
 * JSON array of the file names written. */
RR_API rr_status rr_study_run(const char* config_json, int workers, const char* out_dir,
                              char** manifest_out);

#ifdef __cplusplus
}
#endif

#endif
