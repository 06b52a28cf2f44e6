#ifndef DVPP_H
#define DVPP_H

/* Generated by cbindgen from the dvpp-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every FFI call.
typedef enum DvppStatus {
  DVPP_STATUS_OK = 0,
  // A required pointer argument was null.
  DVPP_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  DVPP_STATUS_INVALID_UTF8 = 2,
  // The configuration failed to parse or validate.
  DVPP_STATUS_CONFIG_ERROR = 3,
  // The simulation aborted (for example on a non-finite signal).
  DVPP_STATUS_RUN_ERROR = 4,
  // A file could not be read or written.
  DVPP_STATUS_IO_ERROR = 5,
  // An index or buffer size was out of range.
  DVPP_STATUS_OUT_OF_RANGE = 6,
  // The library panicked; this is a bug worth reporting.
  DVPP_STATUS_PANIC = 7,
} DvppStatus;

// Numeric trace columns; clamp flags are reported as 0.0 / 1.0.
typedef enum DvppTraceColumn {
  DVPP_TRACE_COLUMN_TIME_S = 0,
  DVPP_TRACE_COLUMN_DELTA_F_PU = 1,
  DVPP_TRACE_COLUMN_P_DES_WIND = 2,
  DVPP_TRACE_COLUMN_P_DES_PV = 3,
  DVPP_TRACE_COLUMN_P_DES_STATCOM = 4,
  DVPP_TRACE_COLUMN_P_CONV_WIND = 5,
  DVPP_TRACE_COLUMN_P_CONV_PV = 6,
  DVPP_TRACE_COLUMN_P_CONV_STATCOM = 7,
  DVPP_TRACE_COLUMN_DP_PCC = 8,
  DVPP_TRACE_COLUMN_DP_GRID = 9,
  DVPP_TRACE_COLUMN_P_LOAD = 10,
  DVPP_TRACE_COLUMN_CLAMP_WIND = 11,
  DVPP_TRACE_COLUMN_CLAMP_PV = 12,
  DVPP_TRACE_COLUMN_CLAMP_STATCOM = 13,
} DvppTraceColumn;

// Opaque scenario handle.
typedef struct DvppScenario DvppScenario;

// Opaque trace handle.
typedef struct DvppTrace DvppTrace;

// Scalar metrics of one run. `recovery_s` is meaningful only when
// `recovered` is true.
typedef struct DvppMetrics {
  double rms_matching_error;
  double nadir_pu;
  double recovery_s;
  bool recovered;
  double epsilon_pu;
  double tracking_rms_wind;
  double tracking_rms_pv;
  double tracking_rms_statcom;
} DvppMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message of the calling thread. The pointer stays valid until
// the next failing call on the same thread.
const char *dvpp_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *dvpp_version(void);

// Loads and validates a scenario configuration file (TOML).
//
// # Safety
// `path` must be a valid NUL-terminated string and `out` a valid pointer.
enum DvppStatus dvpp_scenario_load(const char *path, struct DvppScenario **out);

// Parses and validates a scenario configuration from TOML text.
//
// # Safety
// `text` must be a valid NUL-terminated string and `out` a valid pointer.
enum DvppStatus dvpp_scenario_parse(const char *text, struct DvppScenario **out);

// Frees a scenario handle. Null is a no-op.
//
// # Safety
// `scenario` must have come from a `dvpp_scenario_*` constructor.
void dvpp_scenario_free(struct DvppScenario *scenario);

// Runs the scenario and returns a trace handle.
//
// # Safety
// `scenario` must be a live handle and `out` a valid pointer.
enum DvppStatus dvpp_scenario_run(const struct DvppScenario *scenario, struct DvppTrace **out);

// Runs the scenario with every unit switched to the given participation
// kind: "spf", "dpf" or "adpf".
//
// # Safety
// `scenario` must be a live handle, `kind` a valid string, `out` valid.
enum DvppStatus dvpp_scenario_run_variant(const struct DvppScenario *scenario,
                                          const char *kind,
                                          struct DvppTrace **out);

// Frees a trace handle. Null is a no-op.
//
// # Safety
// `trace` must have come from a run call.
void dvpp_trace_free(struct DvppTrace *trace);

// Number of samples in the trace; 0 for a null handle.
//
// # Safety
// `trace` must be a live handle or null.
size_t dvpp_trace_len(const struct DvppTrace *trace);

// Copies one column into `buf` (up to `cap` values); `written` receives
// the number of copied samples. Fails with `OutOfRange` when the buffer
// is smaller than the trace.
//
// # Safety
// `trace` must be a live handle; `buf` must point to at least `cap`
// doubles; `written` must be a valid pointer.
enum DvppStatus dvpp_trace_column(const struct DvppTrace *trace,
                                  enum DvppTraceColumn column,
                                  double *buf,
                                  size_t cap,
                                  size_t *written);

// Writes the trace in the canonical CSV layout.
//
// # Safety
// `trace` must be a live handle and `path` a valid string.
enum DvppStatus dvpp_trace_write_csv(const struct DvppTrace *trace, const char *path);

// Computes metrics over `[window_start_s, end of trace)` with the default
// recovery band (10% of the peak deviation).
//
// # Safety
// `trace` must be a live handle and `out` a valid pointer.
enum DvppStatus dvpp_trace_metrics(const struct DvppTrace *trace,
                                   double window_start_s,
                                   struct DvppMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DVPP_H */
