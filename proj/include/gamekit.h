/* C interface to the gamekit library.
 *
 * Everything lives behind two opaque handles. A gk_experiment wraps a full
 * configuration (from a JSON file or the bundled study) and runs named
 * commands that write their outputs to disk; a gk_session exposes the solver
 * itself for callers that want gains and values in memory.
 *
 * All functions return gk_status. On failure, gk_last_error() describes what
 * went wrong (thread local, valid until the next failing call on the same
 * thread).
 */
#ifndef GAMEKIT_H
#define GAMEKIT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gk_status {
  GK_OK = 0,
  GK_ERR_INVALID = 1,        /* bad configuration or arguments */
  GK_ERR_IO = 2,             /* file could not be read or written */
  GK_ERR_CERTIFICATION = 3,  /* data failed the rank certificate */
  GK_ERR_SINGULAR = 4,       /* a stage system was numerically singular */
  GK_ERR_INCONSISTENT = 5,   /* initial window inconsistent with the system */
  GK_ERR_NO_CONVERGENCE = 6, /* stationary iteration did not settle */
  GK_ERR_DIVERGED = 7,       /* receding-horizon playback blew up */
  GK_ERR_MISMATCH = 8,       /* a verification or reproduction check failed */
  GK_ERR_INTERNAL = 9
} gk_status;

/* Conventional process exit code for a status: 0 ok, 2 certification,
 * 3 singular, 4 mismatch, 1 anything else. */
int gk_exit_code(gk_status status);

const char* gk_status_name(gk_status status);
const char* gk_last_error(void);
const char* gk_version(void);

/* ---- experiment runner ---- */

typedef struct gk_experiment gk_experiment;

gk_status gk_experiment_open(const char* config_path, gk_experiment** out);
gk_status gk_experiment_open_builtin(gk_experiment** out);
void gk_experiment_free(gk_experiment* e);

/* Override one configuration field. Keys: T, T_min, T_max, eps, M, seed,
 * jobs, plot, out_dir, tol, depths (comma separated). Numeric values are
 * passed as strings. */
gk_status gk_experiment_set(gk_experiment* e, const char* key, const char* value);

/* command is one of: gen-data, check, solve, sweep, reproduce-paper.
 * The human-readable report and a JSON summary are retained on the handle
 * until the next run. *exit_code_out (optional) receives the conventional
 * process exit code for the run, including verification failures that do not
 * raise an error. */
gk_status gk_experiment_run(gk_experiment* e, const char* command, int* exit_code_out);

const char* gk_experiment_report(const gk_experiment* e);
const char* gk_experiment_report_json(const gk_experiment* e);

/* ---- direct solver sessions ---- */

typedef struct gk_session gk_session;

gk_status gk_session_open(const char* config_path, gk_session** out);
gk_status gk_session_open_builtin(gk_session** out);
void gk_session_free(gk_session* s);

/* Solve the lookahead game at horizon T (stage count past the window). */
gk_status gk_session_solve(gk_session* s, int T);

gk_status gk_session_players(const gk_session* s, int* out);
gk_status gk_session_horizon(const gk_session* s, int* out);

/* Stage-1..T gain of one player over the stacked decision vector, row major,
 * windows ordered oldest first. Call with buf == NULL to query the size. */
gk_status gk_session_gain(const gk_session* s, int stage, int player, double* buf,
                          size_t* rows, size_t* cols);
gk_status gk_session_offset(const gk_session* s, int stage, int player, double* buf,
                            size_t* len);

/* Equilibrium cost of each player from the configured initial window. */
gk_status gk_session_values(const gk_session* s, double* buf, size_t* len);

#ifdef __cplusplus
}
#endif

#endif /* GAMEKIT_H */
