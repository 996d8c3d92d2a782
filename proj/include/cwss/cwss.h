/* C interface to the coordinate-wise step size BFGS library.
 *
 * All objects are opaque handles released with the matching *_free call.
 * Functions return a cwss_status; on failure cwss_last_error() describes the
 * problem for the calling thread. Strings returned through char** must be
 * released with cwss_string_free.
 */
#ifndef CWSS_CWSS_H
#define CWSS_CWSS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define CWSS_API __declspec(dllexport)
#else
#define CWSS_API __attribute__((visibility("default")))
#endif

typedef enum cwss_status {
  CWSS_OK = 0,
  CWSS_E_INVALID_ARGUMENT = 1,
  CWSS_E_DIMENSION = 2,
  CWSS_E_NUMERIC = 3,
  CWSS_E_NOT_CONVERGED = 4,
  CWSS_E_IO = 5,
  CWSS_E_SCHEMA = 6,
  CWSS_E_PROPERTY = 7,
  CWSS_E_INTERNAL = 8
} cwss_status;

typedef struct cwss_config cwss_config;
typedef struct cwss_dataset cwss_dataset;
typedef struct cwss_model cwss_model;
typedef struct cwss_problem cwss_problem;

CWSS_API const char* cwss_last_error(void);
CWSS_API const char* cwss_status_name(cwss_status status);
CWSS_API void cwss_string_free(char* s);

/* Exit code for a status: 0 success, 1 validation, 2 property failure,
 * 3 runtime or IO error. */
CWSS_API int cwss_exit_code(cwss_status status);

/* --- configuration ------------------------------------------------------ */

/* preset: "desk" or "paper"; family: "least_squares", "logistic", "logsumexp"
 * or NULL for least squares. */
CWSS_API cwss_status cwss_config_preset(const char* preset, const char* family, cwss_config** out);
/* JSON text overlaid on its "preset" field or on `preset` (may be NULL). */
CWSS_API cwss_status cwss_config_parse(const char* json, const char* preset, cwss_config** out);
CWSS_API cwss_status cwss_config_load(const char* path, const char* preset, cwss_config** out);
CWSS_API cwss_status cwss_config_set_seed(cwss_config* cfg, uint64_t seed);
CWSS_API cwss_status cwss_config_set_strategies(cwss_config* cfg, const char* const* names,
                                                size_t count);
CWSS_API cwss_status cwss_config_to_json(const cwss_config* cfg, char** out);
CWSS_API cwss_status cwss_config_hash(const cwss_config* cfg, char** out);
CWSS_API void cwss_config_free(cwss_config* cfg);

/* --- datasets ----------------------------------------------------------- */

CWSS_API cwss_status cwss_dataset_generate(const cwss_config* cfg, unsigned workers,
                                           cwss_dataset** out);
CWSS_API cwss_status cwss_dataset_write(const cwss_dataset* ds, const char* dir);
/* load_train = 0 skips the train split (enough for bench and verify). */
CWSS_API cwss_status cwss_dataset_read(const char* dir, int load_train, cwss_dataset** out);
CWSS_API cwss_status cwss_dataset_counts(const cwss_dataset* ds, size_t* n_train, size_t* n_test);
/* Copy of the dataset's config. */
CWSS_API cwss_status cwss_dataset_config(const cwss_dataset* ds, cwss_config** out);
/* Replaces the config used by later train/bench calls. Family and dims must
 * match the stored instances. */
CWSS_API cwss_status cwss_dataset_set_config(cwss_dataset* ds, const cwss_config* cfg);
CWSS_API void cwss_dataset_free(cwss_dataset* ds);

/* --- training ----------------------------------------------------------- */

/* Trains on the train split. `resume` may be NULL. When partial_path is not
 * NULL a checkpoint is written there every 25 updates. */
CWSS_API cwss_status cwss_train(const cwss_dataset* ds, const cwss_model* resume,
                                unsigned workers, const char* partial_path, cwss_model** out);
CWSS_API cwss_status cwss_model_load(const char* path, cwss_model** out);
CWSS_API cwss_status cwss_model_save(const cwss_model* model, const char* path);
CWSS_API cwss_status cwss_model_update_count(const cwss_model* model, int* out);
CWSS_API cwss_status cwss_model_train_log_csv(const cwss_model* model, char** out);
CWSS_API void cwss_model_free(cwss_model* model);

/* --- benchmark and verification ----------------------------------------- */

/* Runs every configured strategy on every test instance and writes
 * runs/, summary.json and curves.svg under out_dir (skipped when NULL).
 * model may be NULL unless a strategy is "l2o". */
CWSS_API cwss_status cwss_bench(const cwss_dataset* ds, const cwss_model* model, unsigned workers,
                                int monitor, const char* out_dir, char** summary_json);

/* Returns CWSS_E_PROPERTY when any certificate fails; the report is filled
 * either way. */
CWSS_API cwss_status cwss_verify(const cwss_dataset* ds, char** report, size_t* failures);

/* --- single problems ---------------------------------------------------- */

CWSS_API cwss_status cwss_problem_generate(const char* family, size_t m, size_t n, uint64_t seed,
                                           cwss_problem** out);
CWSS_API cwss_status cwss_problem_load(const char* path, cwss_problem** out);
CWSS_API size_t cwss_problem_dimension(const cwss_problem* p);
/* grad may be NULL; otherwise it must hold dimension() values. */
CWSS_API cwss_status cwss_problem_eval(const cwss_problem* p, const double* x, double* f,
                                       double* grad);
/* Runs BFGS from x0 with one strategy (ls | hgd | fixed:<alpha>; l2o needs
 * a model). Reports iterations taken, convergence and the final point. */
CWSS_API cwss_status cwss_problem_solve(const cwss_problem* p, const double* x0,
                                        const char* strategy, const cwss_model* model,
                                        double grad_tol, int max_iters, int* iterations,
                                        int* converged, double* x_final);
CWSS_API void cwss_problem_free(cwss_problem* p);

#ifdef __cplusplus
}
#endif

#endif
