#ifndef CVBMC_H
#define CVBMC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CvbmcStatus {
  CVBMC_STATUS_OK = 0,
  CVBMC_STATUS_NULL_POINTER = 1,
  CVBMC_STATUS_INVALID_UTF8 = 2,
  CVBMC_STATUS_PARSE_ERROR = 3,
  CVBMC_STATUS_CONFIG_ERROR = 4,
  CVBMC_STATUS_INTERNAL_ERROR = 5,
} CvbmcStatus;

typedef enum CvbmcUnwinding {
  CVBMC_UNWINDING_ASSUME = 0,
  CVBMC_UNWINDING_ASSERT = 1,
} CvbmcUnwinding;

/**
 * Parsed and type-checked MiniC program.
 */
typedef struct CvbmcProgram CvbmcProgram;

/**
 * Settings for verification and equivalence checks.
 */
typedef struct CvbmcOptions {
  /**
   * Loop bound, at least 1.
   */
  uint32_t unwind;
  enum CvbmcUnwinding unwinding;
  /**
   * Use only the built-in enumerative solver, ignoring any registry.
   */
  bool builtin_only;
} CvbmcOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse and type-check `source`. On success `*out` owns a new handle.
 *
 * # Safety
 * `source` must be a nul-terminated string and `out` a valid pointer.
 */
enum CvbmcStatus cvbmc_program_parse(const char *source, struct CvbmcProgram **out);

/**
 * Release a handle from `cvbmc_program_parse`. Null is ignored.
 *
 * # Safety
 * `p` must be null or a live handle, not used afterwards.
 */
void cvbmc_program_free(struct CvbmcProgram *p);

/**
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum CvbmcStatus cvbmc_program_function_count(const struct CvbmcProgram *p, size_t *out);

/**
 * Rename-invariant fingerprint of a function as 64 hex digits.
 *
 * # Safety
 * `p` must be a live handle, `name` nul-terminated, `out` valid.
 */
enum CvbmcStatus cvbmc_function_hash(const struct CvbmcProgram *p, const char *name, char **out);

/**
 * Verify `entry`. Writes the report as JSON and the CLI exit code
 * (0 safe, 10 violation, 20 unknown). `opts` may be null for defaults.
 *
 * # Safety
 * Pointers must be valid; `entry` nul-terminated.
 */
enum CvbmcStatus cvbmc_verify(const struct CvbmcProgram *p,
                              const char *entry,
                              const struct CvbmcOptions *opts,
                              int32_t *exit_code,
                              char **report_json);

/**
 * Check bounded equivalence of `function` across two programs. Writes
 * the verdict as JSON and the exit code (0 equivalent, 10 not, 20
 * unknown or incomparable).
 *
 * # Safety
 * Pointers must be valid; `function` nul-terminated.
 */
enum CvbmcStatus cvbmc_equiv(const struct CvbmcProgram *old,
                             const struct CvbmcProgram *new_version,
                             const char *function,
                             const struct CvbmcOptions *opts,
                             int32_t *exit_code,
                             char **verdict_json);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into this library from the same thread.
 */
const char *cvbmc_last_error(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library, not used afterwards.
 */
void cvbmc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CVBMC_H */
