/* SPDX-License-Identifier: Apache-2.0 */

/* ltshap -- exact Shapley value attributions for decision tree ensembles.
 *
 * C interface of the shared library. All functions are thread-safe unless
 * noted otherwise; handles are opaque and must be released with the matching
 * free function. Functions that can fail return an lts_status; on failure a
 * human-readable message is available from lts_last_error() on the calling
 * thread until the next failing call.
 */

#ifndef LTSHAP_H
#define LTSHAP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LTSHAP_BUILD_SHARED)
#    define LTSHAP_API __declspec(dllexport)
#  else
#    define LTSHAP_API __declspec(dllimport)
#  endif
#else
#  define LTSHAP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct lts_model lts_model;
typedef struct lts_explainer lts_explainer;

typedef enum lts_status {
  LTS_OK = 0,
  LTS_ERR_INVALID_ARGUMENT = 1, /* null pointer, bad size, bad enum value */
  LTS_ERR_PARSE = 2,            /* malformed JSON or schema violation */
  LTS_ERR_VALIDATION = 3,       /* weight or structural violation in a model */
  LTS_ERR_UNSUPPORTED = 4,      /* e.g. more distinct features per path than supported */
  LTS_ERR_NUMERIC = 5,          /* non-finite input value */
  LTS_ERR_IO = 6,               /* file could not be read or written */
  LTS_ERR_INTERNAL = 7
} lts_status;

/* Attribution methods. FUSED and TWO_PASS are the production algorithm
 * (identical output, different memory profile); the remaining three are
 * slow reference implementations kept for conformance checking. */
typedef enum lts_method {
  LTS_METHOD_FUSED = 0,      /* single traversal, O(depth^2) scratch (default) */
  LTS_METHOD_TWO_PASS = 1,   /* stores one summary polynomial per node */
  LTS_METHOD_COEFF_REF = 2,  /* coefficient-form reference, quadratic in depth */
  LTS_METHOD_PER_RULE = 3,   /* closed form summed over decision rules */
  LTS_METHOD_BRUTE_FORCE = 4 /* subset enumeration; requires <= 24 features */
} lts_method;

/* ---- model ------------------------------------------------------------- */

/* Parse a model from a JSON document (see README for the schema). */
LTSHAP_API lts_status lts_model_load_string(const char* json, size_t len,
                                            lts_model** out);
LTSHAP_API lts_status lts_model_load_file(const char* path, lts_model** out);

/* Synthetic random model with a single tree, for testing and benchmarks.
 * target_leaves is clamped to 2^max_depth. If distinct_path_features is
 * nonzero, no feature repeats along any root-to-leaf path. If spine > 0 the
 * tree is guaranteed to contain a chain of `spine` splits on distinct
 * features, fixing the distinct-feature depth when spine == max_depth. */
LTSHAP_API lts_status lts_model_generate_random(int num_features,
                                                int target_leaves,
                                                int max_depth, int spine,
                                                int distinct_path_features,
                                                uint64_t seed, lts_model** out);

LTSHAP_API void lts_model_free(lts_model* model);

LTSHAP_API int lts_model_num_features(const lts_model* model);
LTSHAP_API int lts_model_num_trees(const lts_model* model);
/* Largest number of distinct features on any root-to-leaf path. */
LTSHAP_API int lts_model_max_degree(const lts_model* model);
/* Expected prediction with every feature missing (includes the bias). */
LTSHAP_API double lts_model_base_value(const lts_model* model);
/* Feature name, or NULL when the model carries no names. */
LTSHAP_API const char* lts_model_feature_name(const lts_model* model, int i);

/* Serialize back to the JSON schema. Free the string with lts_string_free. */
LTSHAP_API lts_status lts_model_to_json(const lts_model* model, char** out);
LTSHAP_API void lts_string_free(char* s);

/* Plain prediction of a fully specified instance (n == num_features). */
LTSHAP_API lts_status lts_predict(const lts_model* model, const double* x,
                                  size_t n, double* out);

/* ---- explanation ------------------------------------------------------- */

/* An explainer owns the precomputed evaluation basis for one model. The
 * model must outlive the explainer. Concurrent lts_explain* calls on the
 * same explainer are safe. */
LTSHAP_API lts_status lts_explainer_create(const lts_model* model,
                                           lts_explainer** out);
LTSHAP_API void lts_explainer_free(lts_explainer* ex);

/* Shapley values for one instance. phi must hold num_features doubles;
 * base and prediction may be NULL. sum(phi) + base == prediction up to
 * rounding. */
LTSHAP_API lts_status lts_explain(lts_explainer* ex, const double* x, size_t n,
                                  double* phi, double* base,
                                  double* prediction);

/* Same, with an explicit method (conformance checking, benchmarks). */
LTSHAP_API lts_status lts_explain_method(lts_explainer* ex, lts_method method,
                                         const double* x, size_t n,
                                         double* phi, double* base,
                                         double* prediction);

/* Batch explanation of `rows` instances stored row-major in X (rows x n).
 * phi receives rows*n doubles; base and prediction receive rows doubles
 * each (either may be NULL). Rows are independent; output is bit-identical
 * for any thread count. Rows with invalid input are reported through
 * row_status (LTS_OK per healthy row) and do not abort the batch; the
 * return value is LTS_OK if every row succeeded, otherwise the first
 * failing row's status. row_status may be NULL. threads < 1 means 1. */
LTSHAP_API lts_status lts_explain_batch(lts_explainer* ex, lts_method method,
                                        const double* X, size_t rows, size_t n,
                                        int threads, double* phi, double* base,
                                        double* prediction, int* row_status);

/* ---- diagnostics ------------------------------------------------------- */

/* Message for the most recent failure on this thread ("" if none). */
LTSHAP_API const char* lts_last_error(void);
LTSHAP_API const char* lts_status_name(lts_status s);
LTSHAP_API const char* lts_version(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LTSHAP_H */
