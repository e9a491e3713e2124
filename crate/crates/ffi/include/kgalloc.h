#ifndef KGALLOC_H
#define KGALLOC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KgStatus {
  KG_STATUS_OK = 0,
  KG_STATUS_NULL_ARGUMENT = 1,
  KG_STATUS_INVALID_UTF8 = 2,
  KG_STATUS_PARSE_ERROR = 3,
  KG_STATUS_UNKNOWN_TASK = 4,
  KG_STATUS_NO_ELIGIBLE_RESOURCE = 5,
  KG_STATUS_INELIGIBLE_SELECTION = 6,
  KG_STATUS_INTERNAL = 7,
} KgStatus;

/**
 * Opaque engine handle.
 */
typedef struct KgEngine KgEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * A new engine with an empty ontology, no rules and an empty graph.
 */
struct KgEngine *kg_engine_new(void);

/**
 * A new engine preloaded with the bundled loan-application demo. Returns
 * null if the bundled knowledge fails to load.
 */
struct KgEngine *kg_engine_new_demo(void);

/**
 * Releases an engine. Null is ignored.
 *
 * # Safety
 * `engine` must come from `kg_engine_new*` and not be used afterwards.
 */
void kg_engine_free(struct KgEngine *engine);

/**
 * Replaces the ontology. Loaded rules are re-checked against it; on
 * failure nothing changes.
 *
 * # Safety
 * `engine` must be a live handle and `text` a NUL-terminated string.
 */
enum KgStatus kg_engine_load_ontology(struct KgEngine *engine, const char *text);

/**
 * Replaces the rule set.
 *
 * # Safety
 * `engine` must be a live handle and `text` a NUL-terminated string.
 */
enum KgStatus kg_engine_load_rules(struct KgEngine *engine, const char *text);

/**
 * Replaces the graph with the parsed triples.
 *
 * # Safety
 * `engine` must be a live handle and `text` a NUL-terminated string.
 */
enum KgStatus kg_engine_load_graph(struct KgEngine *engine, const char *text);

/**
 * Adds one triple written as a graph-file line, e.g. `task-9 performedBy User_26`.
 *
 * # Safety
 * `engine` must be a live handle and `line` a NUL-terminated string.
 */
enum KgStatus kg_engine_add_triple(struct KgEngine *engine, const char *line);

/**
 * Writes the number of triples in the graph to `out`.
 *
 * # Safety
 * `engine` must be a live handle and `out` writable.
 */
enum KgStatus kg_engine_triple_count(struct KgEngine *engine, size_t *out);

/**
 * Assesses every available resource for `task` and writes the ranking as
 * JSON to `out`.
 *
 * # Safety
 * `engine` must be a live handle, `task` a NUL-terminated string and `out` writable.
 */
enum KgStatus kg_engine_rank(struct KgEngine *engine, const char *task, char **out);

/**
 * Picks the top-ranked eligible resource for `task` and writes the
 * decision as JSON to `out`. The graph is not changed.
 *
 * # Safety
 * `engine` must be a live handle, `task` a NUL-terminated string and `out` writable.
 */
enum KgStatus kg_engine_decide(struct KgEngine *engine,
                               const char *task,
                               int64_t timestamp,
                               char **out);

/**
 * Validates a human choice of `resource` for `task` and writes the
 * decision as JSON to `out`. Hard violations yield
 * `KG_STATUS_INELIGIBLE_SELECTION` with the messages in the last error.
 *
 * # Safety
 * `engine` must be a live handle, `task` and `resource` NUL-terminated strings and `out` writable.
 */
enum KgStatus kg_engine_decide_human(struct KgEngine *engine,
                                     const char *task,
                                     const char *resource,
                                     int64_t timestamp,
                                     char **out);

/**
 * The last error message for this handle, or an empty string. Owned by the
 * engine; valid until the next call on it.
 *
 * # Safety
 * `engine` must be a live handle or null.
 */
const char *kg_engine_last_error(const struct KgEngine *engine);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void kg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KGALLOC_H */
