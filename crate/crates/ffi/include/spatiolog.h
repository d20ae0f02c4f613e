#ifndef SPATIOLOG_H
#define SPATIOLOG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. `SL_OK` is zero; everything else is a failure.
typedef enum {
  SL_OK = 0,
  SL_NULL_ARGUMENT = 1,
  SL_INVALID_UTF8 = 2,
  SL_IO = 3,
  SL_PARSE = 4,
  SL_VALIDATION = 5,
  SL_DATA = 6,
  SL_EVAL = 7,
  SL_OUT_OF_RANGE = 8,
  SL_WRONG_KIND = 9,
  SL_PANIC = 10,
} SlStatus;

// Evaluation paradigm for [`sl_query_run`].
typedef enum {
  SL_ENTITY = 0,
  SL_RELATION = 1,
  // Relation evaluation whose result rows are resolved to entities one by one.
  SL_RELATION_ITERATOR = 2,
} SlMode;

// Cell type of a result column.
typedef enum {
  SL_ID = 0,
  SL_REAL = 1,
} SlKind;

// A loaded set of layers and type specs.
typedef struct SlCatalog SlCatalog;

// The rows of one query answer. Independent of the catalog once produced.
typedef struct SlResult SlResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread. Valid until the next failing call on this thread.
const char *sl_last_error(void);

// Library version as a static string.
const char *sl_version(void);

// New empty catalog with the default type specs. Null only on internal failure.
SlCatalog *sl_catalog_new(void);

// # Safety
// `catalog` is null or a live handle from [`sl_catalog_new`].
void sl_catalog_free(SlCatalog *catalog);

// Loads a CSV layer (`id,code,wkt` or `id,code,x,y`) as `category`.
//
// # Safety
// Pointers are null or valid; `out_count` may be null.
SlStatus sl_catalog_load_csv(SlCatalog *catalog,
                             const char *path,
                             const char *category,
                             bool lonlat,
                             size_t *out_count);

// Loads a GeoJSON FeatureCollection as `category`.
//
// # Safety
// Pointers are null or valid; `out_count` may be null.
SlStatus sl_catalog_load_geojson(SlCatalog *catalog,
                                 const char *path,
                                 const char *category,
                                 bool lonlat,
                                 size_t *out_count);

// Adds `name = codes` type spec lines, overriding same-named specs.
//
// # Safety
// Pointers are null or valid.
SlStatus sl_catalog_load_typespecs(SlCatalog *catalog, const char *spec_text);

// Registers the default synthetic dataset for `seed` with an `accidents`
// layer of `accidents` entities sampled from its pool.
//
// # Safety
// `catalog` is null or a live handle.
SlStatus sl_catalog_generate(SlCatalog *catalog, uint64_t seed, size_t accidents);

// Parses, validates and evaluates `query` in `mode`. On success `*out` owns a new result.
//
// # Safety
// Pointers are null or valid; `out` must be writable.
SlStatus sl_query_run(SlCatalog *catalog, const char *query, SlMode mode, SlResult **out);

// # Safety
// `result` is null or a live handle from [`sl_query_run`].
void sl_result_free(SlResult *result);

// Row count; zero for a null handle.
//
// # Safety
// `result` is null or a live handle.
size_t sl_result_rows(const SlResult *result);

// Column count; zero for a null handle.
//
// # Safety
// `result` is null or a live handle.
size_t sl_result_columns(const SlResult *result);

// Column name owned by the result, or null when out of range.
//
// # Safety
// `result` is null or a live handle.
const char *sl_result_column_name(const SlResult *result, size_t column);

// Cell type at (`row`, `column`).
//
// # Safety
// `result` is null or a live handle; `out` is writable.
SlStatus sl_result_kind(const SlResult *result, size_t row, size_t column, SlKind *out);

// Entity id at (`row`, `column`); `SL_WRONG_KIND` for a real-valued cell.
//
// # Safety
// `result` is null or a live handle; `out` is writable.
SlStatus sl_result_id(const SlResult *result, size_t row, size_t column, uint64_t *out);

// Real value at (`row`, `column`); `SL_WRONG_KIND` for an id cell.
//
// # Safety
// `result` is null or a live handle; `out` is writable.
SlStatus sl_result_real(const SlResult *result, size_t row, size_t column, double *out);

// Spatial index probes spent producing the result.
//
// # Safety
// `result` is null or a live handle.
uint64_t sl_result_index_probes(const SlResult *result);

// Exact distance evaluations spent producing the result.
//
// # Safety
// `result` is null or a live handle.
uint64_t sl_result_distance_evals(const SlResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPATIOLOG_H */
