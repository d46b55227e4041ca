/* C interface to the ccepc panel estimation library.
 *
 * Every function returns a ccepc_status. On failure the message of the most
 * recent error on the calling thread is available from ccepc_last_error().
 * Objects returned through out-parameters are owned by the caller and must
 * be released with the matching *_free function. Strings returned through
 * char** out-parameters are released with ccepc_string_free. */
#ifndef CCEPC_CCEPC_H
#define CCEPC_CCEPC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(CCEPC_BUILDING_LIBRARY)
#    define CCEPC_API __declspec(dllexport)
#  else
#    define CCEPC_API __declspec(dllimport)
#  endif
#else
#  define CCEPC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes for the command-line driver. */
typedef enum ccepc_status {
  CCEPC_OK = 0,
  CCEPC_ERR_INTERNAL = 1,
  CCEPC_ERR_CONFIG = 2,     /* configuration, schema or ingestion error */
  CCEPC_ERR_ESTIMATION = 3, /* estimation failure */
  CCEPC_ERR_IO = 4          /* file system error */
} ccepc_status;

typedef struct ccepc_panel ccepc_panel;
typedef struct ccepc_result ccepc_result;

CCEPC_API const char* ccepc_version(void);

/* Message of the last failed call on this thread; empty when none. */
CCEPC_API const char* ccepc_last_error(void);

CCEPC_API void ccepc_string_free(char* s);

/* Panels. `schema_json` follows the "input.schema" section of the run
 * config; `dgp_json` the "simulation.dgp" section. */
CCEPC_API ccepc_status ccepc_panel_load_csv(const char* path, const char* schema_json, ccepc_panel** out);
CCEPC_API ccepc_status ccepc_panel_simulate(const char* dgp_json, uint64_t seed, ccepc_panel** out);
CCEPC_API void ccepc_panel_free(ccepc_panel* panel);
CCEPC_API int ccepc_panel_units(const ccepc_panel* panel);
CCEPC_API int ccepc_panel_periods(const ccepc_panel* panel);
/* Copies series `name` row-major into `values` (units x periods, or
 * 1 x periods for a common factor); missing cells become NaN. `capacity`
 * is the length of `values`; `rows` receives the row count. */
CCEPC_API ccepc_status ccepc_panel_series(const ccepc_panel* panel, const char* name, double* values,
                                          size_t capacity, int* rows);
/* The panel as CSV text (country,period,<variables>,<common factors>). */
CCEPC_API ccepc_status ccepc_panel_csv(const ccepc_panel* panel, char** out);

/* Commands: "estimate", "pipeline", "simulate", "numfac", "cd".
 * `config_json` is the run config document; `overrides_json` may be NULL
 * or an object with any of seed, threads, strict_cd, pcs, kmax, csa_lags,
 * cf_lags, output, reps, preset. */
CCEPC_API ccepc_status ccepc_config_resolve(const char* command, const char* config_json,
                                            const char* overrides_json, char** out);
CCEPC_API ccepc_status ccepc_run(const char* command, const char* config_json, const char* overrides_json,
                                 ccepc_result** out);

/* Borrowed strings, valid until ccepc_result_free. */
CCEPC_API const char* ccepc_result_json(const ccepc_result* result);
CCEPC_API const char* ccepc_result_text(const ccepc_result* result);
CCEPC_API const char* ccepc_result_output_dir(const ccepc_result* result);
CCEPC_API int ccepc_result_artifact_count(const ccepc_result* result);
CCEPC_API const char* ccepc_result_artifact_name(const ccepc_result* result, int index);
CCEPC_API const char* ccepc_result_artifact_data(const ccepc_result* result, int index, size_t* size);
/* Writes every artifact into `directory` (NULL: the configured output
 * directory), creating it when needed. */
CCEPC_API ccepc_status ccepc_result_write(const ccepc_result* result, const char* directory);
CCEPC_API void ccepc_result_free(ccepc_result* result);

/* Single-test entry points on raw arrays. `residuals` is row-major
 * units x periods. */
CCEPC_API ccepc_status ccepc_cd_test(const double* residuals, int units, int periods, double* statistic,
                                     double* p_value);
CCEPC_API ccepc_status ccepc_ahn_horenstein(const double* eigenvalues, int count, int kmax, int* k_er,
                                            int* k_gr);

#ifdef __cplusplus
}
#endif

#endif
