/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef PTCHRON_H
#define PTCHRON_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PtcStatus {
  PTC_STATUS_OK = 0,
  PTC_STATUS_NULL_POINTER = 1,
  PTC_STATUS_INVALID_UTF8 = 2,
  PTC_STATUS_INGEST_ERROR = 3,
  PTC_STATUS_CONFIG_ERROR = 4,
  PTC_STATUS_OUT_OF_RANGE = 5,
  PTC_STATUS_INTERNAL = 6,
} PtcStatus;

/**
 * Results for one log. Opaque to C.
 */
typedef struct PtcAnalysis PtcAnalysis;

/**
 * Analysis thresholds. Start from [`ptc_config_default`].
 */
typedef struct PtcConfig {
  uint32_t min_events;
  double min_tree_coverage;
  uint32_t jump_threshold;
  uint32_t rename_gap;
  uint32_t size_split;
} PtcConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

struct PtcConfig ptc_config_default(void);

/**
 * Ingests a CSV log held in `data[0..len)` and analyzes every session.
 * `grammar` is a NUL-terminated name such as "mini"; `config` may be null
 * for the defaults. On success `*out` owns a new handle.
 *
 * # Safety
 * `data` must point to `len` readable bytes, `grammar` to a NUL-terminated
 * string, `config` to a valid config or null, and `out` to writable storage.
 */
enum PtcStatus ptc_analysis_from_csv(const uint8_t *data,
                                     size_t len,
                                     const char *grammar,
                                     const struct PtcConfig *config,
                                     struct PtcAnalysis **out);

/**
 * Number of sessions that passed the filters; 0 for a null handle.
 *
 * # Safety
 * `analysis` must be null or a live handle.
 */
size_t ptc_analysis_session_count(const struct PtcAnalysis *analysis);

/**
 * JSON report of kept session `index` (sessions are ordered by key).
 *
 * # Safety
 * `analysis` must be a live handle and `out` writable.
 */
enum PtcStatus ptc_analysis_session_report_json(const struct PtcAnalysis *analysis,
                                                size_t index,
                                                char **out);

/**
 * Corpus summary as JSON, without a timestamp.
 *
 * # Safety
 * `analysis` must be a live handle and `out` writable.
 */
enum PtcStatus ptc_analysis_summary_json(const struct PtcAnalysis *analysis, char **out);

/**
 * # Safety
 * `analysis` must be null or a handle not freed before.
 */
void ptc_analysis_free(struct PtcAnalysis *analysis);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not freed before.
 */
void ptc_string_free(char *s);

/**
 * Message for the last failure on this thread; empty if none. Valid until
 * the next failing call on the same thread.
 */
const char *ptc_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PTCHRON_H */
