#ifndef ISP_H
#define ISP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Solver backend for every level.
typedef enum IspBackend {
  ISP_BACKEND_AUTO = 0,
  ISP_BACKEND_EXACT = 1,
  ISP_BACKEND_GREEDY = 2,
} IspBackend;

// Result codes. `ISP_STATUS_OK` is zero; every other value is an error.
typedef enum IspStatus {
  ISP_STATUS_OK = 0,
  ISP_STATUS_NULL_POINTER = 1,
  ISP_STATUS_INVALID_UTF8 = 2,
  ISP_STATUS_IO = 3,
  ISP_STATUS_PARSE = 4,
  ISP_STATUS_INVALID_INPUT = 5,
  ISP_STATUS_INFEASIBLE = 6,
  ISP_STATUS_OUT_OF_RANGE = 7,
  ISP_STATUS_PANIC = 8,
} IspStatus;

// A loaded catalog with its label incidence matrix.
typedef struct IspCatalog IspCatalog;

// Item embeddings aligned with a catalog.
typedef struct IspEmbedding IspEmbedding;

// Output of [`isp_solve`].
typedef struct IspResult IspResult;

// Options for [`isp_solve`]; start from [`isp_solve_options_default`].
typedef struct IspSolveOptions {
  // Final selection bound; 0 means no bound.
  size_t t;
  uint64_t seed;
  enum IspBackend backend;
  // Per-level time budget for the exact backend.
  uint64_t time_budget_ms;
  // Fail instead of dropping uncoverable labels.
  bool strict;
} IspSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next `isp_*` call on the same thread.
const char *isp_last_error(void);

// Library version as a static string.
const char *isp_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void isp_string_free(char *s);

struct IspSolveOptions isp_solve_options_default(void);

// Loads a CSV or JSON catalog (by extension) and builds its incidence
// matrix. `categories` is a comma-separated list, null for all;
// `pairs` is e.g. `"genre:language"`, null for none.
//
// # Safety
// String arguments must be null or nul-terminated; `out` must be writable.
enum IspStatus isp_catalog_load(const char *path,
                                const char *categories,
                                const char *pairs,
                                struct IspCatalog **out);

// # Safety
// `catalog` must be null or a live handle from [`isp_catalog_load`].
void isp_catalog_free(struct IspCatalog *catalog);

// Number of items, or 0 for a null handle.
//
// # Safety
// `catalog` must be null or a live handle.
size_t isp_catalog_item_count(const struct IspCatalog *catalog);

// Number of incidence rows (labels and observed pairs), or 0 for null.
//
// # Safety
// `catalog` must be null or a live handle.
size_t isp_catalog_label_count(const struct IspCatalog *catalog);

// TF-IDF embedding of the item texts, L2-normalized.
//
// # Safety
// `catalog` must be a live handle; `out` must be writable.
enum IspStatus isp_embedding_tfidf(const struct IspCatalog *catalog,
                                   size_t vocab_size,
                                   struct IspEmbedding **out);

// Reads an embedding file and aligns it with the catalog's item order.
//
// # Safety
// `path` must be nul-terminated, `catalog` a live handle, `out` writable.
enum IspStatus isp_embedding_load(const char *path,
                                  const struct IspCatalog *catalog,
                                  struct IspEmbedding **out);

// # Safety
// `embedding` must be null or a live handle.
void isp_embedding_free(struct IspEmbedding *embedding);

// Solves the three-level selection. `options` may be null for defaults.
//
// # Safety
// Handles must be live; `options` null or readable; `out` writable.
enum IspStatus isp_solve(const struct IspCatalog *catalog,
                         const struct IspEmbedding *embedding,
                         const struct IspSolveOptions *options,
                         struct IspResult **out);

// # Safety
// `result` must be null or a live handle.
void isp_result_free(struct IspResult *result);

// Size of the unicost cover, or 0 for null.
//
// # Safety
// `result` must be null or a live handle.
size_t isp_result_k(const struct IspResult *result);

// Number of items in the final selection, or 0 for null.
//
// # Safety
// `result` must be null or a live handle.
size_t isp_result_len(const struct IspResult *result);

// Fraction of incidence rows the final selection covers.
//
// # Safety
// `result` must be null or a live handle.
double isp_result_coverage(const struct IspResult *result);

// Copies the id of the `index`-th final item into a new string.
//
// # Safety
// `result` must be a live handle; `out` writable.
enum IspStatus isp_result_item(const struct IspResult *result, size_t index, char **out);

// Whole result (all levels, costs, coverage) as JSON.
//
// # Safety
// `result` must be a live handle; `out` writable.
enum IspStatus isp_result_to_json(const struct IspResult *result, char **out);

// Warm-starts every non-warm item from the `n_warm` ids in `warm` at
// quantile `q`; writes the assignment map as JSON.
//
// # Safety
// `warm` must point to `n_warm` nul-terminated strings; handles live.
enum IspStatus isp_warm_start(const struct IspCatalog *catalog,
                              const struct IspEmbedding *embedding,
                              const char *const *warm,
                              size_t n_warm,
                              double q,
                              char **out);

// Runs the exploration simulation from a JSON config (the `simulation`
// object of a CLI config file) and writes the result as JSON.
//
// # Safety
// `config_json` must be nul-terminated; handles live; `out` writable.
enum IspStatus isp_simulate(const struct IspCatalog *catalog,
                            const struct IspEmbedding *embedding,
                            const char *config_json,
                            char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISP_H */
