/* C interface to the funglm library: opaque handles, status codes, and a
 * per-thread error message. The CLI and any non-C++ callers link against this
 * surface only. */
#ifndef FUNGLM_H
#define FUNGLM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum funglm_status {
    FUNGLM_OK = 0,
    FUNGLM_ERR_BAD_ARG = 1, /* null handle / out-of-range index */
    FUNGLM_ERR_CONFIG = 2,  /* config parse or validation failure */
    FUNGLM_ERR_IO = 3,      /* file not readable / not writable */
    FUNGLM_ERR_RUNTIME = 4  /* numerical or internal failure */
} funglm_status;

typedef struct funglm_config funglm_config;
typedef struct funglm_report funglm_report;

const char* funglm_version(void);

/* Message for the most recent failure on this thread; empty string if none. */
const char* funglm_last_error(void);

/* Configuration ----------------------------------------------------------- */

funglm_status funglm_config_load(const char* json_path, funglm_config** out_cfg);
funglm_status funglm_config_parse(const char* json_text, funglm_config** out_cfg);

/* Harness mode: rate-sweep, verify-spectral, verify-mle, verify-hellinger,
 * verify-gaussian-tail, lower-bound or single-run. Must be set before run. */
funglm_status funglm_config_set_mode(funglm_config* cfg, const char* mode);
funglm_status funglm_config_set_seed(funglm_config* cfg, uint64_t seed);
funglm_status funglm_config_set_out_dir(funglm_config* cfg, const char* dir);
void funglm_config_free(funglm_config* cfg);

/* Execution ---------------------------------------------------------------- */

/* Runs the configured mode, writing the replication CSV, assertions.csv and
 * summary.json into the output directory. Returns a report handle on success. */
funglm_status funglm_run(const funglm_config* cfg, funglm_report** out_report);

/* Report ------------------------------------------------------------------- */

int funglm_report_all_passed(const funglm_report* rep); /* 1 if every assertion passed */
int funglm_report_assertion_count(const funglm_report* rep);
funglm_status funglm_report_assertion(const funglm_report* rep, int index, const char** name,
                                      double* value, double* bound, int* pass);
/* Pretty summary JSON; pointer owned by the report. */
const char* funglm_report_summary_json(const funglm_report* rep);
void funglm_report_free(funglm_report* rep);

#ifdef __cplusplus
}
#endif

#endif /* FUNGLM_H */
