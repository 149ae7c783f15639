#ifndef LAMBDA_EIT_H
#define LAMBDA_EIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a call.
typedef enum LeStatus {
  LE_STATUS_OK = 0,
  // A diagnostic could not be computed.
  LE_STATUS_DIAGNOSTIC = 1,
  // Invalid configuration, preset name or parameter.
  LE_STATUS_CONFIG = 2,
  // The solver stopped on a numerical instability.
  LE_STATUS_INSTABILITY = 3,
  LE_STATUS_IO = 4,
  LE_STATUS_NULL_ARGUMENT = 5,
  LE_STATUS_INVALID_UTF8 = 6,
  // Output buffer too small; the required length was written.
  LE_STATUS_BUFFER_TOO_SMALL = 7,
  LE_STATUS_PANIC = 8,
} LeStatus;

// Which series to copy out of a record.
typedef enum LeSeries {
  LE_SERIES_BOUNDARY = 0,
  LE_SERIES_EXIT = 1,
} LeSeries;

// A resolved run: medium, pulse program and grid.
typedef struct LeConfig LeConfig;

// The sampled result of a run.
typedef struct LeRecord LeRecord;

// One row of a boundary or exit series.
typedef struct LeFieldSample {
  double tau;
  double omega_p_re;
  double omega_p_im;
  double omega_c_re;
  double omega_c_im;
} LeFieldSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into the library from this thread.
const char *le_last_error_message(void);

// Library version as a static string.
const char *le_version(void);

// Configuration of a named preset.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum LeStatus le_config_from_preset(const char *name, struct LeConfig **out);

// Configuration from the text of a run configuration file.
//
// # Safety
// `config_text` must be a NUL-terminated string and `out` a valid pointer.
enum LeStatus le_config_from_text(const char *config_text, struct LeConfig **out);

// Grid size of a configuration: cells along the cell and time samples.
//
// # Safety
// `config` must come from this library; `n_xi` and `n_tau` may be null.
enum LeStatus le_config_grid(const struct LeConfig *config, uintptr_t *n_xi, uintptr_t *n_tau);

// Releases a configuration; null is ignored.
//
// # Safety
// `config` must come from this library and not be used afterwards.
void le_config_free(struct LeConfig *config);

// Runs a configuration. On an instability the partial record is still
// returned through `out` together with [`LeStatus::Instability`].
//
// # Safety
// `config` must come from this library and `out` be a valid pointer.
enum LeStatus le_run(const struct LeConfig *config, struct LeRecord **out);

// Number of time samples in a record.
//
// # Safety
// `record` must come from this library or be null (returns 0).
uintptr_t le_record_len(const struct LeRecord *record);

// Copies a series into `buffer`. `written` receives the number of samples;
// when `capacity` is too small it receives the required length instead.
//
// # Safety
// `buffer` must hold `capacity` samples (it may be null when `capacity`
// is 0); `record` and `written` must be valid.
enum LeStatus le_record_series(const struct LeRecord *record,
                               enum LeSeries which,
                               struct LeFieldSample *buffer,
                               uintptr_t capacity,
                               uintptr_t *written);

// Metrics of a record as a JSON document; release with
// [`le_string_free`].
//
// # Safety
// `record` must come from this library and `out` be a valid pointer.
enum LeStatus le_record_metrics_json(const struct LeRecord *record, char **out);

// Writes the figure tables `figure_id` (e.g. "fig3") into `dir`.
//
// # Safety
// `record` must come from this library; strings must be NUL-terminated.
enum LeStatus le_record_emit_figure(const struct LeRecord *record,
                                    const char *figure_id,
                                    const char *dir);

// Releases a record; null is ignored.
//
// # Safety
// `record` must come from this library and not be used afterwards.
void le_record_free(struct LeRecord *record);

// Releases a string returned by this library; null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void le_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LAMBDA_EIT_H */
