#ifndef FMLP_FMLP_H
#define FMLP_FMLP_H

/* C interface to the fmlp library: bases, projection, functional MLP
 * models, data generation and the experiment harness.
 *
 * Handles are opaque and owned by the caller; release each with its _free
 * function. Every fallible call returns an fmlp_status. On failure the
 * message of the most recent error on the calling thread is available from
 * fmlp_last_error(). Matrices are row-major. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FMLP_API __declspec(dllexport)
#else
#define FMLP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fmlp_status {
  FMLP_OK = 0,
  FMLP_ERR_INVALID_ARGUMENT = 1,
  FMLP_ERR_INVALID_DIMENSION = 2,
  FMLP_ERR_INVALID_KNOTS = 3,
  FMLP_ERR_DOMAIN = 4,
  FMLP_ERR_SHAPE = 5,
  FMLP_ERR_EMPTY_DATA = 6,
  FMLP_ERR_UNDERDETERMINED = 7,
  FMLP_ERR_CONDITIONING = 8,
  FMLP_ERR_EVALUATION = 9,
  FMLP_ERR_DIVERGENCE = 10,
  FMLP_ERR_BASIS_MISMATCH = 11,
  FMLP_ERR_PARSE = 12,
  FMLP_ERR_ORDERING = 13,
  FMLP_ERR_CONFIG = 14,
  FMLP_ERR_IO = 15,
  FMLP_ERR_INTERNAL = 16
} fmlp_status;

typedef struct fmlp_basis fmlp_basis;
typedef struct fmlp_model fmlp_model;
typedef struct fmlp_dataset fmlp_dataset;
typedef struct fmlp_config fmlp_config;
typedef struct fmlp_results fmlp_results;

typedef void (*fmlp_log_fn)(const char* line, void* user);

FMLP_API const char* fmlp_version(void);
FMLP_API const char* fmlp_last_error(void);
FMLP_API const char* fmlp_status_name(fmlp_status status);
/* 1 for errors caused by bad input (arguments, files, configs), 0 for
 * failures while computing and for FMLP_OK. */
FMLP_API int fmlp_status_is_validation(fmlp_status status);

/* ---- bases ---- */
FMLP_API fmlp_status fmlp_basis_fourier(size_t p, fmlp_basis** out);
FMLP_API fmlp_status fmlp_basis_bspline(int degree, const double* interior_knots, size_t n_knots, fmlp_basis** out);
FMLP_API fmlp_status fmlp_basis_load(const char* path, fmlp_basis** out);
FMLP_API fmlp_status fmlp_basis_save(const fmlp_basis* basis, const char* path);
FMLP_API size_t fmlp_basis_dim(const fmlp_basis* basis);
/* k is 0-based. */
FMLP_API fmlp_status fmlp_basis_eval(const fmlp_basis* basis, size_t k, double x, double* out);
/* Gram matrix under the reference quadrature, p*p entries. */
FMLP_API fmlp_status fmlp_basis_gram(const fmlp_basis* basis, double* out);
FMLP_API void fmlp_basis_free(fmlp_basis* basis);

/* ---- projection ---- */
/* Least-squares coordinates of m samples; coords_out holds dim(basis) values. */
FMLP_API fmlp_status fmlp_project_sampled(const fmlp_basis* basis, const double* xs, const double* values, size_t m,
                                          double ridge, double* coords_out);
FMLP_API fmlp_status fmlp_reconstruct(const fmlp_basis* basis, const double* coords, double x, double* out);
/* Curves CSV -> coordinates CSV. */
FMLP_API fmlp_status fmlp_project_file(const fmlp_basis* basis, const char* curves_path, double ridge,
                                       const char* coords_path, fmlp_results** summary);

/* ---- models ---- */
FMLP_API fmlp_status fmlp_model_load(const char* path, fmlp_model** out);
FMLP_API fmlp_status fmlp_model_save(const fmlp_model* model, const char* path);
FMLP_API fmlp_status fmlp_model_shape(const fmlp_model* model, size_t* p, size_t* hidden, double* alpha);
FMLP_API fmlp_status fmlp_model_forward(const fmlp_model* model, const double* x, size_t p, double* out);
FMLP_API void fmlp_model_free(fmlp_model* model);
/* Coordinates CSV -> predictions CSV (`id,y`); targets_path may be NULL. */
FMLP_API fmlp_status fmlp_predict_file(const fmlp_model* model, const char* coords_path, const char* out_path,
                                       const char* targets_path, fmlp_results** summary);

/* ---- data sets ---- */
/* Joins a coordinates CSV with a targets CSV by id. */
FMLP_API fmlp_status fmlp_dataset_load(const char* coords_path, const char* targets_path, fmlp_dataset** out);
FMLP_API size_t fmlp_dataset_size(const fmlp_dataset* data);
FMLP_API size_t fmlp_dataset_dim(const fmlp_dataset* data);
FMLP_API void fmlp_dataset_free(fmlp_dataset* data);

/* ---- configs ---- */
FMLP_API fmlp_status fmlp_config_load(const char* path, fmlp_config** out);
FMLP_API fmlp_status fmlp_config_parse(const char* json, fmlp_config** out);
/* Defaults of a kind: "approx", "consistency", "schedule", "dataset", "train". */
FMLP_API fmlp_status fmlp_config_default(const char* kind, fmlp_config** out);
/* Replaces the master seed and every seed derived from it. */
FMLP_API fmlp_status fmlp_config_set_seed(fmlp_config* config, uint64_t seed);
FMLP_API fmlp_status fmlp_config_set_workers(fmlp_config* config, unsigned workers);
FMLP_API const char* fmlp_config_kind(const fmlp_config* config);
/* 16 hex digits plus terminator: buffer of at least 17 bytes. */
FMLP_API fmlp_status fmlp_config_hash(const fmlp_config* config, char* buffer, size_t size);
FMLP_API void fmlp_config_free(fmlp_config* config);

/* ---- runs ---- */
/* approx, consistency or schedule config. log may be NULL. */
FMLP_API fmlp_status fmlp_run_experiment(const fmlp_config* config, fmlp_log_fn log, void* user, fmlp_results** out);
/* dataset config: writes the generated files into out_dir (which must exist). */
FMLP_API fmlp_status fmlp_generate_dataset(const fmlp_config* config, const char* out_dir, fmlp_results** out);
/* train config; config may be NULL for the defaults. */
FMLP_API fmlp_status fmlp_train(const fmlp_config* config, const fmlp_dataset* data, fmlp_model** model,
                                fmlp_results** out);

/* ---- results ---- */
typedef struct fmlp_result_row {
  const char* run_id;
  const char* config_hash;
  int64_t p; /* -1 when not applicable */
  int64_t hidden;
  int64_t n;
  const char* metric;
  double value;
  double se;
  double wall_ms;
} fmlp_result_row;

FMLP_API size_t fmlp_results_size(const fmlp_results* results);
/* Strings stay valid until the results handle is freed. */
FMLP_API fmlp_status fmlp_results_row(const fmlp_results* results, size_t index, fmlp_result_row* out);
FMLP_API size_t fmlp_results_failures(const fmlp_results* results);
FMLP_API fmlp_status fmlp_results_save(const fmlp_results* results, const char* path);
FMLP_API fmlp_status fmlp_results_load(const char* path, fmlp_results** out);
/* Writes run-meta.json for a finished run. config may be NULL for runs
 * without one (project, predict); outputs is a comma separated file list. */
FMLP_API fmlp_status fmlp_write_run_meta(const fmlp_config* config, const fmlp_results* results, const char* command,
                                         double wall_ms, const char* outputs, const char* path);
FMLP_API void fmlp_results_free(fmlp_results* results);

#ifdef __cplusplus
}
#endif

#endif
