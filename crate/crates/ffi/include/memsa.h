#ifndef MEMSA_H
#define MEMSA_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every `ms_*` function.
 */
typedef enum MsStatus {
  MS_STATUS_OK = 0,
  MS_STATUS_NULL_POINTER = 1,
  MS_STATUS_INVALID_ARGUMENT = 2,
  MS_STATUS_IO = 3,
  MS_STATUS_PARSE = 4,
  MS_STATUS_NUMERICAL = 5,
  MS_STATUS_UNSUPPORTED = 6,
  MS_STATUS_MEMORY_CAP = 7,
  MS_STATUS_PANIC = 8,
} MsStatus;

/**
 * Access method codes; `Auto` lets the cost model decide.
 */
typedef enum MsAccess {
  MS_ACCESS_AUTO = -1,
  MS_ACCESS_ROW_WISE = 0,
  MS_ACCESS_COL_WISE = 1,
  MS_ACCESS_COL_TO_ROW = 2,
} MsAccess;

typedef enum MsTask {
  MS_TASK_SVM = 0,
  MS_TASK_LR = 1,
  MS_TASK_LS = 2,
  MS_TASK_LP = 3,
  MS_TASK_QP = 4,
} MsTask;

typedef enum MsModelRep {
  MS_MODEL_REP_AUTO = -1,
  MS_MODEL_REP_PER_CORE = 0,
  MS_MODEL_REP_PER_NODE = 1,
  MS_MODEL_REP_PER_MACHINE = 2,
} MsModelRep;

typedef enum MsDataRep {
  MS_DATA_REP_AUTO = -1,
  MS_DATA_REP_SHARDING = 0,
  MS_DATA_REP_FULL_REPLICATION = 1,
  MS_DATA_REP_IMPORTANCE = 2,
} MsDataRep;

typedef struct MsGraph MsGraph;

/**
 * Example matrix, plus anchors when built from an edge list.
 */
typedef struct MsMatrix MsMatrix;

typedef struct MsResult MsResult;

/**
 * Training configuration. Start from `ms_train_config_default`. Enum-like
 * fields hold `MsTask`, `MsAccess`, `MsModelRep` and `MsDataRep` codes;
 * unknown codes are rejected.
 */
typedef struct MsTrainConfig {
  int32_t task;
  double step;
  double lambda;
  double decay;
  uint32_t max_epochs;
  uint32_t nodes;
  uint32_t cores_per_node;
  /**
   * Non-zero pins workers to cores.
   */
  int32_t pin;
  int32_t access;
  int32_t model_rep;
  int32_t data_rep;
  /**
   * Only read when `data_rep` is `Importance`.
   */
  double epsilon;
  /**
   * Non-positive means the default write/read cost factor.
   */
  double alpha;
  uint64_t seed;
} MsTrainConfig;

typedef struct MsGibbsConfig {
  /**
   * An `MsModelRep` code; `Auto` means one chain per node.
   */
  int32_t replication;
  uint32_t nodes;
  uint32_t cores_per_node;
  uint32_t sweeps;
  uint32_t burn_in;
  uint64_t seed;
} MsGibbsConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *ms_last_error(void);

/**
 * Load an svmlight or binary-cache file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MsStatus ms_matrix_load(const char *path, struct MsMatrix **out);

/**
 * Generate a synthetic matrix from a recipe such as `"gaussian 1000 20 0.1"`.
 *
 * # Safety
 * `recipe` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MsStatus ms_matrix_generate(const char *recipe, uint64_t seed, struct MsMatrix **out);

/**
 * Build a labelled matrix from `nnz` coordinate triplets and `n_rows` labels.
 *
 * # Safety
 * `rows`, `cols` and `vals` must point to `nnz` elements, `labels` to
 * `n_rows` elements, and `out` must be valid.
 */
enum MsStatus ms_matrix_from_triplets(size_t n_rows,
                                      size_t n_cols,
                                      const size_t *rows,
                                      const size_t *cols,
                                      const double *vals,
                                      size_t nnz,
                                      const double *labels,
                                      struct MsMatrix **out);

/**
 * Build a graph task (`Lp` or `Qp`) from an edge-list file, anchoring a
 * random `anchor_fraction` of vertices.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MsStatus ms_matrix_from_edges(const char *path,
                                   int32_t task,
                                   double anchor_fraction,
                                   uint64_t seed,
                                   struct MsMatrix **out);

/**
 * # Safety
 * `m` must be a valid handle; any out pointer may be null.
 */
enum MsStatus ms_matrix_shape(const struct MsMatrix *m,
                              size_t *n_rows,
                              size_t *n_cols,
                              size_t *nnz);

/**
 * # Safety
 * `m` must be null or a handle from this library, freed at most once.
 */
void ms_matrix_free(struct MsMatrix *m);

/**
 * Access method the cost model picks for `task` on `m`. `alpha <= 0` uses
 * the default cost factor.
 *
 * # Safety
 * `m` and `out` must be valid pointers.
 */
enum MsStatus ms_choose_access(const struct MsMatrix *m,
                               int32_t task,
                               double alpha,
                               enum MsAccess *out);

/**
 * Defaults: least squares, step 0.01, no regularization, decay 0.95,
 * 100 epochs, one worker, every plan axis automatic, seed 0.
 */
struct MsTrainConfig ms_train_config_default(void);

/**
 * Train a model on `m`.
 *
 * # Safety
 * `m`, `cfg` and `out` must be valid pointers.
 */
enum MsStatus ms_train(const struct MsMatrix *m,
                       const struct MsTrainConfig *cfg,
                       struct MsResult **out);

/**
 * Number of recorded epochs, counting the initial state as epoch 0.
 *
 * # Safety
 * `r` must be a valid handle.
 */
size_t ms_result_epochs(const struct MsResult *r);

/**
 * Loss after `epoch` epochs.
 *
 * # Safety
 * `r` and `out` must be valid pointers.
 */
enum MsStatus ms_result_loss(const struct MsResult *r, size_t epoch, double *out);

/**
 * Copy the trained model into `buf`. `len` must be at least the model
 * dimension; `written` receives the dimension.
 *
 * # Safety
 * `buf` must hold `len` doubles; `r` and `written` must be valid.
 */
enum MsStatus ms_result_model(const struct MsResult *r, double *buf, size_t len, size_t *written);

/**
 * Loss of the model in `r` on `m` under the task it was trained for.
 *
 * # Safety
 * `r`, `m` and `out` must be valid pointers.
 */
enum MsStatus ms_result_eval(const struct MsResult *r, const struct MsMatrix *m, double *out);

/**
 * # Safety
 * `r` must be null or a handle from this library, freed at most once.
 */
void ms_result_free(struct MsResult *r);

/**
 * Load a factor graph in the text format.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MsStatus ms_graph_load(const char *path, struct MsGraph **out);

/**
 * Number of marginal slots a graph needs: the sum of its domain sizes.
 *
 * # Safety
 * `g` must be a valid handle.
 */
size_t ms_graph_marginal_len(const struct MsGraph *g);

/**
 * Run Gibbs chains. Marginals are written variable by variable into
 * `marginals`, which must hold `ms_graph_marginal_len` doubles.
 *
 * # Safety
 * `g` and `cfg` must be valid; `marginals` must hold `len` doubles;
 * `samples_per_sec` may be null.
 */
enum MsStatus ms_gibbs_run(const struct MsGraph *g,
                           const struct MsGibbsConfig *cfg,
                           double *marginals,
                           size_t len,
                           double *samples_per_sec);

/**
 * # Safety
 * `g` must be null or a handle from this library, freed at most once.
 */
void ms_graph_free(struct MsGraph *g);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEMSA_H */
