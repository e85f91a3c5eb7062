#ifndef TDS_QAOA_H
#define TDS_QAOA_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TdsStatus {
  TDS_STATUS_OK = 0,
  TDS_STATUS_NULL_POINTER = 1,
  TDS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The graph has an isolated vertex, so no total dominating set exists.
   */
  TDS_STATUS_INFEASIBLE = 3,
  TDS_STATUS_PARSE = 4,
  TDS_STATUS_RESOURCE = 5,
  TDS_STATUS_BUFFER_TOO_SMALL = 6,
  TDS_STATUS_INTERNAL = 7,
} TdsStatus;

/**
 * Opaque graph handle.
 */
typedef struct TdsGraph TdsGraph;

/**
 * Opaque compiled QUBO handle.
 */
typedef struct TdsQubo TdsQubo;

/**
 * Opaque handle to the outcome of one optimize-and-measure run.
 */
typedef struct TdsRunResult TdsRunResult;

typedef struct TdsQubitCounts {
  size_t q_tdp;
  size_t q_dp;
  size_t gap;
} TdsQubitCounts;

typedef struct TdsRunConfig {
  uint32_t layers;
  /**
   * Absolute penalty. Zero or negative selects the default of 1.5 per vertex.
   */
  double penalty;
  uint32_t max_iterations;
  uint64_t shots;
  uint64_t seed;
  bool exact_metrics;
  double gamma_scale;
  double beta_scale;
  double init_jitter;
} TdsRunConfig;

typedef struct TdsRunMetrics {
  double correct_probability;
  double optimal_probability;
  double z_star_probability;
  double final_cost;
  bool z_star_is_tds;
  bool z_star_is_minimal_tds;
  size_t evaluations;
  size_t n_qubits;
} TdsRunMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or an empty string.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *tds_last_error_message(void);

/**
 * Static description of a status code.
 */
const char *tds_status_string(enum TdsStatus status);

/**
 * The built-in 6-vertex instance.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum TdsStatus tds_graph_example(struct TdsGraph **out);

/**
 * Builds a graph from `n_edges` pairs stored flat in `edges` (`u0 v0 u1 v1 ...`).
 *
 * # Safety
 * `edges` must point to `2 * n_edges` readable values (it may be null when
 * `n_edges` is 0); `out` must be writable.
 */
enum TdsStatus tds_graph_new(size_t n_vertices,
                             const uint32_t *edges,
                             size_t n_edges,
                             struct TdsGraph **out);

/**
 * Parses the text graph format (`n m` header, then `m` lines `u v`).
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum TdsStatus tds_graph_parse(const char *text, struct TdsGraph **out);

/**
 * # Safety
 * `graph` must be null or a handle from this library that is not used again.
 */
void tds_graph_free(struct TdsGraph *graph);

/**
 * Vertex count, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t tds_graph_n_vertices(const struct TdsGraph *graph);

/**
 * Whether `vertices[0..len]` is a total dominating set.
 *
 * # Safety
 * `graph` must be live, `vertices` must hold `len` values (or be null when
 * `len` is 0), `out` must be writable.
 */
enum TdsStatus tds_graph_is_total_dominating_set(const struct TdsGraph *graph,
                                                 const size_t *vertices,
                                                 size_t len,
                                                 bool *out);

/**
 * Size of a minimum total dominating set, by exhaustive search.
 *
 * # Safety
 * `graph` must be live and `out` writable.
 */
enum TdsStatus tds_graph_min_tds_size(const struct TdsGraph *graph, size_t *out);

/**
 * # Safety
 * `graph` must be live and `out` writable.
 */
enum TdsStatus tds_qubit_counts(const struct TdsGraph *graph, struct TdsQubitCounts *out);

/**
 * Upper bound on the total-domination qubit count; requires minimum degree 2.
 *
 * # Safety
 * `graph` must be live and `out` writable.
 */
enum TdsStatus tds_qubit_upper_bound(const struct TdsGraph *graph, double *out);

/**
 * # Safety
 * `graph` must be live and `out` writable.
 */
enum TdsStatus tds_qubo_compile(const struct TdsGraph *graph, double penalty, struct TdsQubo **out);

/**
 * # Safety
 * `model` must be null or a handle from this library that is not used again.
 */
void tds_qubo_free(struct TdsQubo *model);

/**
 * Variable count (vertices then slack bits), or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t tds_qubo_n_vars(const struct TdsQubo *model);

/**
 * QUBO value of the assignment `bits[0..len]` (nonzero means 1).
 *
 * # Safety
 * `model` must be live, `bits` must hold `len` bytes, `out` must be writable.
 */
enum TdsStatus tds_qubo_evaluate(const struct TdsQubo *model,
                                 const uint8_t *bits,
                                 size_t len,
                                 double *out);

/**
 * Defaults: 5 layers, default penalty, 500 evaluations, 100000 shots, seed
 * 0, exact metrics, ramp scales 1.0, jitter 0.1.
 */
struct TdsRunConfig tds_run_config_default(void);

/**
 * Compiles, optimizes and measures one configuration on `graph`.
 *
 * # Safety
 * `graph` and `config` must be live and `out` writable.
 */
enum TdsStatus tds_run(const struct TdsGraph *graph,
                       const struct TdsRunConfig *config,
                       struct TdsRunResult **out);

/**
 * # Safety
 * `result` must be live and `out` writable.
 */
enum TdsStatus tds_run_result_metrics(const struct TdsRunResult *result, struct TdsRunMetrics *out);

/**
 * Most probable vertex bitstring (leftmost character is vertex 0), owned by
 * the result handle and valid until it is freed.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
const char *tds_run_result_z_star(const struct TdsRunResult *result);

/**
 * Copies the optimized angles into `gammas` and `betas`, each of capacity
 * `capacity`. `layers_out` receives the layer count even when the buffers
 * are too small.
 *
 * # Safety
 * `result` must be live; `gammas` and `betas` must hold `capacity` values;
 * `layers_out` must be writable.
 */
enum TdsStatus tds_run_result_angles(const struct TdsRunResult *result,
                                     double *gammas,
                                     double *betas,
                                     size_t capacity,
                                     size_t *layers_out);

/**
 * # Safety
 * `result` must be null or a handle from this library that is not used again.
 */
void tds_run_result_free(struct TdsRunResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TDS_QAOA_H */
