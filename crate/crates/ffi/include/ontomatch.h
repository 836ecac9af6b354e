#ifndef ONTOMATCH_H
#define ONTOMATCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OmStatus {
  OM_STATUS_OK = 0,
  OM_STATUS_NULL_ARGUMENT = 1,
  OM_STATUS_INVALID_UTF8 = 2,
  OM_STATUS_PARSE_ERROR = 3,
  /**
   * Repair ran but the document is still invalid; outputs are still set.
   */
  OM_STATUS_UNREPAIRABLE = 4,
  OM_STATUS_IO = 5,
  /**
   * Incompatible inputs, such as merging alignments of different ontologies.
   */
  OM_STATUS_CONFLICT = 6,
  OM_STATUS_PANIC = 7,
} OmStatus;

/**
 * Parsed alignment.
 */
typedef struct OmAlignment OmAlignment;

/**
 * Parsed RDF graph.
 */
typedef struct OmGraph OmGraph;

/**
 * Precision, recall and F1 for simple and complex cells.
 */
typedef struct OmScores {
  double simple_precision;
  double simple_recall;
  double simple_f1;
  double complex_precision;
  double complex_recall;
  double complex_f1;
} OmScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *om_version(void);

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread; do not free.
 */
const char *om_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void om_string_free(char *s);

/**
 * Parses Turtle text.
 *
 * # Safety
 * `turtle` must be a NUL-terminated string; `out` must be writable.
 */
enum OmStatus om_graph_parse_turtle(const char *turtle, struct OmGraph **out);

/**
 * Loads a Turtle or RDF/XML file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum OmStatus om_graph_load(const char *path, struct OmGraph **out);

/**
 * Number of triples, or 0 for a null handle.
 *
 * # Safety
 * `graph` must be null or a live handle.
 */
size_t om_graph_triple_count(const struct OmGraph *graph);

/**
 * Serializes a graph as Turtle.
 *
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
enum OmStatus om_graph_to_turtle(const struct OmGraph *graph, char **out);

/**
 * # Safety
 * `graph` must be null or a handle from this library, freed once.
 */
void om_graph_free(struct OmGraph *graph);

/**
 * Parses an alignment document without repairing it.
 *
 * # Safety
 * `xml` must be a NUL-terminated string; `out` must be writable.
 */
enum OmStatus om_alignment_parse(const char *xml, struct OmAlignment **out);

/**
 * Repairs an alignment document. `out_xml` receives the repaired text and
 * `out_fixes` (if non-null) the number of fixes applied. Returns
 * `Unrepairable` when the result still fails validation.
 *
 * # Safety
 * `input` must be a NUL-terminated string; `out_xml` must be writable;
 * `out_fixes` may be null.
 */
enum OmStatus om_repair(const char *input, char **out_xml, size_t *out_fixes);

/**
 * Counts validation issues in an alignment document; when there are any,
 * [`om_last_error`] holds the first one.
 *
 * # Safety
 * `xml` must be a NUL-terminated string; `out_issues` must be writable.
 */
enum OmStatus om_validate(const char *xml, size_t *out_issues);

/**
 * Number of cells, or 0 for a null handle.
 *
 * # Safety
 * `alignment` must be null or a live handle.
 */
size_t om_alignment_cell_count(const struct OmAlignment *alignment);

/**
 * # Safety
 * `alignment` must be a live handle; `out` must be writable.
 */
enum OmStatus om_alignment_to_xml(const struct OmAlignment *alignment, char **out);

/**
 * Merges `count` alignments into a new handle, removing duplicate cells.
 *
 * # Safety
 * `items` must point to `count` live handles (it may be null when `count`
 * is 0); `out` must be writable.
 */
enum OmStatus om_alignment_merge(const struct OmAlignment *const *items,
                                 size_t count,
                                 struct OmAlignment **out);

/**
 * # Safety
 * `alignment` must be null or a handle from this library, freed once.
 */
void om_alignment_free(struct OmAlignment *alignment);

/**
 * Scores `system` against `reference` with relaxed precision and recall.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
enum OmStatus om_score(const struct OmAlignment *system,
                       const struct OmAlignment *reference,
                       struct OmScores *out);

/**
 * Deterministic token estimate of `text`.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum OmStatus om_estimate_tokens(const char *input, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ONTOMATCH_H */
