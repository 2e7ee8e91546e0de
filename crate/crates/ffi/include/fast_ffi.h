#ifndef FAST_FFI_H
#define FAST_FFI_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FastStatus {
  FAST_STATUS_OK = 0,
  FAST_STATUS_NULL_POINTER = 1,
  FAST_STATUS_INVALID_ARGUMENT = 2,
  FAST_STATUS_EXPIRED = 3,
  FAST_STATUS_DUPLICATE_QUERY = 4,
  FAST_STATUS_UNKNOWN_QUERY = 5,
  FAST_STATUS_OUT_OF_SPACE = 6,
  FAST_STATUS_INTERNAL = 7,
} FastStatus;

// Opaque index handle.
typedef struct FastIndexHandle FastIndexHandle;

// Opaque match result: query ids in ascending order.
typedef struct FastResult FastResult;

typedef struct FastCleanReport {
  uintptr_t removed;
  uintptr_t demoted;
  uintptr_t nodes_deleted;
} FastCleanReport;

typedef struct FastStats {
  uintptr_t pyramid_nodes;
  uintptr_t textual_nodes;
  uintptr_t frequent_nodes;
  uintptr_t list_entries;
  uintptr_t shared_lists;
  uintptr_t live_queries;
  uint64_t clock;
  double mean_replication;
} FastStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates an index. `*out` receives the handle on success.
//
// # Safety
// `out` must be valid for writes.
enum FastStatus fast_index_new(uintptr_t theta,
                               uint32_t gran_max,
                               uint64_t clean_interval,
                               struct FastIndexHandle **out);

// # Safety
// `h` must be null or a handle from [`fast_index_new`] not yet freed.
void fast_index_free(struct FastIndexHandle *h);

// Registers a conjunctive query over `n_keywords` NUL-terminated keywords.
//
// # Safety
// `h` must be a live handle; `keywords` must point to `n_keywords` C strings.
enum FastStatus fast_insert(struct FastIndexHandle *h,
                            uint64_t qid,
                            double x_min,
                            double y_min,
                            double x_max,
                            double y_max,
                            const char *const *keywords,
                            uintptr_t n_keywords,
                            uint64_t t_exp);

// Registers a disjunction of conjunctions. `keywords` holds every clause's
// keywords back to back and `clause_lens[i]` is the length of clause `i`.
//
// # Safety
// `h` must be a live handle; `clause_lens` must hold `n_clauses` entries and
// `keywords` their sum.
enum FastStatus fast_insert_dnf(struct FastIndexHandle *h,
                                uint64_t qid,
                                double x_min,
                                double y_min,
                                double x_max,
                                double y_max,
                                const char *const *keywords,
                                const uintptr_t *clause_lens,
                                uintptr_t n_clauses,
                                uint64_t t_exp);

// # Safety
// `h` must be a live handle.
enum FastStatus fast_remove(struct FastIndexHandle *h, uint64_t qid);

// Matches a point object. `*out` receives a result to release with
// [`fast_result_free`].
//
// # Safety
// `h` must be a live handle, `keywords` must point to `n_keywords` C strings
// and `out` must be valid for writes.
enum FastStatus fast_match_point(struct FastIndexHandle *h,
                                 double x,
                                 double y,
                                 const char *const *keywords,
                                 uintptr_t n_keywords,
                                 struct FastResult **out);

// Matches a rectangular object; see [`fast_match_point`].
//
// # Safety
// As for [`fast_match_point`].
enum FastStatus fast_match_rect(struct FastIndexHandle *h,
                                double x_min,
                                double y_min,
                                double x_max,
                                double y_max,
                                const char *const *keywords,
                                uintptr_t n_keywords,
                                struct FastResult **out);

// # Safety
// `r` must be null or a live result.
uintptr_t fast_result_len(const struct FastResult *r);

// Pointer to the result's ids, valid until the result is freed.
//
// # Safety
// `r` must be null or a live result.
const uint64_t *fast_result_ids(const struct FastResult *r);

// # Safety
// `r` must be null or a result not yet freed.
void fast_result_free(struct FastResult *r);

// Advances the logical clock, cleaning once per elapsed interval. `out`
// may be null.
//
// # Safety
// `h` must be a live handle; `out` must be null or valid for writes.
enum FastStatus fast_advance_clock(struct FastIndexHandle *h,
                                   uint64_t dt,
                                   struct FastCleanReport *out);

// Runs one cleaning step regardless of the clock. `out` may be null.
//
// # Safety
// As for [`fast_advance_clock`].
enum FastStatus fast_clean_step(struct FastIndexHandle *h, struct FastCleanReport *out);

// # Safety
// `h` must be a live handle and `out` valid for writes.
enum FastStatus fast_stats(struct FastIndexHandle *h, struct FastStats *out);

// Message for the last failure on this thread, or an empty string. The
// pointer stays valid until the next failing call on the same thread.
const char *fast_last_error(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* FAST_FFI_H */
