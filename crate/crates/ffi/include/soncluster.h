#ifndef SONCLUSTER_H
#define SONCLUSTER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SonMethod {
  SON_METHOD_AMA = 0,
  SON_METHOD_AMA_ACCELERATED = 1,
  SON_METHOD_ADMM = 2,
} SonMethod;

typedef enum SonPathMode {
  SON_PATH_MODE_EXACT = 0,
  SON_PATH_MODE_STRICT = 1,
  SON_PATH_MODE_CARP = 2,
} SonPathMode;

typedef enum SonStatus {
  SON_STATUS_OK = 0,
  SON_STATUS_NULL_POINTER = 1,
  SON_STATUS_INVALID_ARGUMENT = 2,
  SON_STATUS_INVALID_DATA = 3,
  SON_STATUS_SHAPE = 4,
  SON_STATUS_NUMERICAL = 5,
  SON_STATUS_PARSE = 6,
  SON_STATUS_IO = 7,
  SON_STATUS_BUFFER_TOO_SMALL = 8,
  SON_STATUS_PANIC = 9,
} SonStatus;

/*
 Observations, with the generating labels when produced by [`son_generate`].
 */
typedef struct SonData SonData;

typedef struct SonGraph SonGraph;

typedef struct SonPath SonPath;

/*
 Solver settings passed by value.
 */
typedef struct SonSolverOptions {
  enum SonMethod method;
  /*
   Duality-gap and residual tolerance.
   */
  double tolerance;
  size_t max_iterations;
  /*
   Relative fusion threshold on centroid distances.
   */
  double fusion_tolerance;
  enum SonPathMode path_mode;
} SonSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL after a successful one.
 The pointer stays valid until the next `son_*` call on the same thread.
 */
const char *son_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *son_version(void);

struct SonSolverOptions son_solver_options_default(void);

/*
 Copies a `p x n` column-major matrix. `mask` may be NULL (all observed);
 otherwise a nonzero byte marks an observed entry.

 # Safety
 `values` must point to `p * n` doubles and `mask`, when not NULL, to `p * n` bytes.
 */
enum SonStatus son_data_new(const double *values,
                            const uint8_t *mask,
                            size_t p,
                            size_t n,
                            struct SonData **out);

/*
 Synthetic data from a generator string such as `"half_moons:n1=20,n2=20"`.

 # Safety
 `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SonStatus son_generate(const char *spec, uint64_t seed, struct SonData **out);

/*
 # Safety
 `data` must be NULL or a handle from this library not yet freed.
 */
void son_data_free(struct SonData *data);

/*
 # Safety
 `data` must be a live handle; `p` and `n` valid pointers.
 */
enum SonStatus son_data_shape(const struct SonData *data, size_t *p, size_t *n);

/*
 Copies the `p * n` values (column-major) into `out`.

 # Safety
 `data` must be a live handle and `out` point to `capacity` doubles.
 */
enum SonStatus son_data_values(const struct SonData *data, double *out, size_t capacity);

/*
 Copies the `n` generating labels. Fails for data not made by [`son_generate`].

 # Safety
 `data` must be a live handle and `out` point to `capacity` entries.
 */
enum SonStatus son_data_labels(const struct SonData *data, size_t *out, size_t capacity);

/*
 Builds a weight graph, e.g. method `"mst+knn:3"` with weights `"gaussian"`.

 # Safety
 `data` must be a live handle, `method` and `weights` NUL-terminated strings.
 */
enum SonStatus son_graph_build(const struct SonData *data,
                               const char *method,
                               const char *weights,
                               struct SonGraph **out);

/*
 # Safety
 `graph` must be NULL or a handle from this library not yet freed.
 */
void son_graph_free(struct SonGraph *graph);

/*
 # Safety
 `graph` must be a live handle and `out` a valid pointer.
 */
enum SonStatus son_graph_num_edges(const struct SonGraph *graph, size_t *out);

/*
 Copies edge endpoints (`i < j`) and weights; each buffer holds `capacity` entries.

 # Safety
 `graph` must be a live handle and each buffer point to `capacity` entries.
 */
enum SonStatus son_graph_edges(const struct SonGraph *graph,
                               size_t *i,
                               size_t *j,
                               double *w,
                               size_t capacity);

/*
 Smallest `gamma` (within a factor 2) fusing every connected component.

 # Safety
 `data` and `graph` must be live handles, `options` and `out` valid pointers.
 */
enum SonStatus son_gamma_max(const struct SonData *data,
                             const struct SonGraph *graph,
                             const struct SonSolverOptions *options,
                             double *out);

/*
 Solves at one `gamma`, writing the `p * n` centroids into `u`.

 # Safety
 Handles must be live; `u` must point to `capacity` doubles; `iterations` may be NULL.
 */
enum SonStatus son_solve(const struct SonData *data,
                         const struct SonGraph *graph,
                         double gamma,
                         const struct SonSolverOptions *options,
                         double *u,
                         size_t capacity,
                         size_t *iterations);

/*
 Solution path over `count` strictly increasing `gammas`.

 # Safety
 Handles must be live, `gammas` must point to `count` doubles.
 */
enum SonStatus son_path_compute(const struct SonData *data,
                                const struct SonGraph *graph,
                                const double *gammas,
                                size_t count,
                                const struct SonSolverOptions *options,
                                struct SonPath **out);

/*
 # Safety
 `path` must be NULL or a handle from this library not yet freed.
 */
void son_path_free(struct SonPath *path);

/*
 # Safety
 `path` must be a live handle and `out` a valid pointer.
 */
enum SonStatus son_path_len(const struct SonPath *path, size_t *out);

/*
 `gamma` and cluster count of snapshot `index`; either output may be NULL.

 # Safety
 `path` must be a live handle.
 */
enum SonStatus son_path_snapshot(const struct SonPath *path,
                                 size_t index,
                                 double *gamma,
                                 size_t *clusters);

/*
 Cluster label of each of the `n` observations at snapshot `index`.

 # Safety
 `path` must be a live handle and `out` point to `capacity` entries.
 */
enum SonStatus son_path_labels(const struct SonPath *path,
                               size_t index,
                               size_t *out,
                               size_t capacity);

/*
 Centroids (`p * n`, column-major) at snapshot `index`.

 # Safety
 `path` must be a live handle and `out` point to `capacity` doubles.
 */
enum SonStatus son_path_centroids(const struct SonPath *path,
                                  size_t index,
                                  double *out,
                                  size_t capacity);

/*
 Dendrogram of the path in Newick format; release with [`son_string_free`].

 # Safety
 `path` must be a live handle and `out` a valid pointer.
 */
enum SonStatus son_path_newick(const struct SonPath *path, char **out);

/*
 Index of the snapshot chosen by eBIC with exponent `zeta`.

 # Safety
 `path` must be a live handle and `chosen` a valid pointer.
 */
enum SonStatus son_path_select_ebic(const struct SonPath *path, double zeta, size_t *chosen);

/*
 # Safety
 `s` must be NULL or a string returned by this library not yet freed.
 */
void son_string_free(char *s);

/*
 Adjusted Rand index between two labelings of `len` items.

 # Safety
 `a` and `b` must point to `len` entries and `out` be a valid pointer.
 */
enum SonStatus son_adjusted_rand_index(const size_t *a, const size_t *b, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SONCLUSTER_H */
