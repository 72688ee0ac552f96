#ifndef PSLAB_H
#define PSLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PSLAB_API __declspec(dllexport)
#else
#define PSLAB_API __attribute__((visibility("default")))
#endif

/* Status codes; the numeric values are stable. */
typedef enum pslab_status {
  PSLAB_OK = 0,
  PSLAB_INVALID_ARGUMENT = 1,
  PSLAB_BOUNDARY_MASS = 2,
  PSLAB_WRAP_AROUND = 3,
  PSLAB_OUT_OF_DOMAIN = 4,
  PSLAB_COVERAGE = 5,
  PSLAB_ALIAS_VIOLATION = 6,
  PSLAB_BOUNDARY_LEAKAGE = 7,
  PSLAB_GRID_MISMATCH = 8,
  PSLAB_CFL_VIOLATION = 9,
  PSLAB_NEGATIVE_UNDERSHOOT = 10,
  PSLAB_INVARIANT_VIOLATION = 11,
  PSLAB_DENOMINATOR_UNDERFLOW = 12,
  PSLAB_QUADRATURE_DIVERGENCE = 13,
  PSLAB_INSUFFICIENT_SAMPLING = 14,
  PSLAB_STEP_OVERFLOW = 15,
  PSLAB_CONFIG_ERROR = 16,
  PSLAB_IO_ERROR = 17,
  PSLAB_INTERNAL = 18
} pslab_status;

typedef struct pslab_config pslab_config;
typedef struct pslab_result pslab_result;

PSLAB_API const char* pslab_version(void);
PSLAB_API const char* pslab_status_name(int status);
/* Message of the last failure on the calling thread; empty when none. */
PSLAB_API const char* pslab_last_error(void);
/* Frees strings returned through char** out-parameters. */
PSLAB_API void pslab_string_free(char* s);

/* Scenario names: index 0 .. count-1; NULL past the end. */
PSLAB_API size_t pslab_scenario_count(void);
PSLAB_API const char* pslab_scenario_name(size_t index);

/* Configuration. preset may be NULL for "default". */
PSLAB_API int pslab_config_create(const char* scenario, const char* preset, pslab_config** out);
PSLAB_API void pslab_config_free(pslab_config* cfg);
/* Merges a JSON object over cfg; unknown keys fail with PSLAB_CONFIG_ERROR and leave cfg unchanged. */
PSLAB_API int pslab_config_merge_json(pslab_config* cfg, const char* json);
PSLAB_API int pslab_config_set_h_list(pslab_config* cfg, const double* h, size_t n);
PSLAB_API int pslab_config_set_t_max(pslab_config* cfg, double t_max);
PSLAB_API int pslab_config_set_jobs(pslab_config* cfg, int jobs);
PSLAB_API int pslab_config_set_record_wall_time(pslab_config* cfg, int enabled);
PSLAB_API int pslab_config_scenario(const pslab_config* cfg, const char** out);
PSLAB_API int pslab_config_validate(const pslab_config* cfg);
PSLAB_API int pslab_config_hash(const pslab_config* cfg, uint64_t* out);
PSLAB_API int pslab_config_to_json(const pslab_config* cfg, char** out);

/* Runs the configured scenario. */
PSLAB_API int pslab_run(const pslab_config* cfg, pslab_result** out);
/* Runs every invariant suite at reduced size. */
PSLAB_API int pslab_run_selftest(pslab_result** out);
PSLAB_API void pslab_result_free(pslab_result* r);

PSLAB_API int pslab_result_passed(const pslab_result* r, int* out);
PSLAB_API int pslab_result_row_count(const pslab_result* r, size_t* out);
/* Any output pointer may be NULL; metric stays valid until the result is freed. */
PSLAB_API int pslab_result_row(const pslab_result* r, size_t i, double* h, double* t, const char** metric,
                               double* value, double* wall_time_s);
PSLAB_API int pslab_result_check_count(const pslab_result* r, size_t* out);
PSLAB_API int pslab_result_check(const pslab_result* r, size_t i, const char** name, double* value, int* pass);
PSLAB_API int pslab_result_fit(const pslab_result* r, const char* name, double* slope, double* intercept,
                               double* r2);
PSLAB_API int pslab_result_csv(const pslab_result* r, char** out);
PSLAB_API int pslab_result_summary_json(const pslab_result* r, char** out);
/* Writes <scenario>.csv and <scenario>_summary.json into dir. */
PSLAB_API int pslab_result_write(const pslab_result* r, const char* dir);

/* Numerical helpers. */
PSLAB_API int pslab_fit_slope(const double* h, const double* values, size_t n, double* slope, double* intercept,
                              double* r2);
PSLAB_API int pslab_coherent_overlap(double x1, double xi1, double x2, double xi2, double h, double* re,
                                     double* im);
/* <A Psi_X, Psi_X> for A = Op^weyl of exp(-((x-cx)^2 + (xi-cxi)^2) / w^2) on the grid [-L, L) with n nodes. */
PSLAB_API int pslab_gaussian_wick_symbol(double cx, double cxi, double w, double h, double L, size_t n,
                                         double x, double xi, double* re, double* im);

#ifdef __cplusplus
}
#endif

#endif
