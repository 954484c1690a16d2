#ifndef DELEGATE_RLA_H
#define DELEGATE_RLA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum DrlaStatus {
  DRLA_STATUS_OK = 0,
  // A required pointer argument was null.
  DRLA_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  DRLA_STATUS_INVALID_UTF8 = 2,
  // Malformed election, spec or parameters.
  DRLA_STATUS_INPUT_ERROR = 3,
  // The contest has no defined outcome, for example no valid ballots.
  DRLA_STATUS_UNSUPPORTED_OUTCOME = 4,
  // The audit cannot be completed short of a full manual count.
  DRLA_STATUS_FULL_COUNT = 5,
  // An internal error; please report it.
  DRLA_STATUS_INTERNAL = 6,
} DrlaStatus;

// An election profile loaded from JSON.
typedef struct DrlaElection DrlaElection;

// Risk parameters for spec generation and sample-size estimation.
typedef struct DrlaRiskParams {
  double alpha;
  double gamma;
  double error_rate;
  uint32_t trials;
  uint64_t seed;
} DrlaRiskParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Default risk parameters: alpha 0.05, gamma 1.1, error rate 0.002, 20 trials, seed 0.
struct DrlaRiskParams drla_risk_params_default(void);

// Parses an election from a NUL-terminated JSON document.
//
// # Safety
// `json` must be a valid C string and `out` a valid pointer.
enum DrlaStatus drla_election_from_json(const char *json, struct DrlaElection **out);

// Loads an election JSON file.
//
// # Safety
// `path` must be a valid C string and `out` a valid pointer.
enum DrlaStatus drla_election_from_path(const char *path, struct DrlaElection **out);

// Releases an election handle. Null is ignored.
//
// # Safety
// `election` must come from this library and not be used afterwards.
void drla_election_free(struct DrlaElection *election);

// Number of candidates on the roster, or 0 for a null handle.
//
// # Safety
// `election` must be null or a live handle.
uint32_t drla_election_candidate_count(const struct DrlaElection *election);

// Total ballots cast, blank ballots included, or 0 for a null handle.
//
// # Safety
// `election` must be null or a live handle.
uint64_t drla_election_total_ballots(const struct DrlaElection *election);

// Tabulates viability and the delegate allocation; writes the outcome report as JSON.
//
// # Safety
// `election` must be a live handle and `out_json` a valid pointer.
enum DrlaStatus drla_tabulate(const struct DrlaElection *election, char **out_json);

// Generates an audit specification at `level` (1, 2 or 3) and writes it as JSON.
//
// When no affordable assertion set exists the spec is still written and
// the call returns `FullCount`.
//
// # Safety
// `election` must be a live handle, `params` and `out_json` valid pointers.
enum DrlaStatus drla_generate_spec(const struct DrlaElection *election,
                                   uint8_t level,
                                   const struct DrlaRiskParams *params,
                                   char **out_json);

// Estimated number of ballot draws for a spec JSON under `params`.
//
// Returns `FullCount` when the estimate reaches the ballot count.
//
// # Safety
// `spec_json` must be a valid C string, `params` and `out_draws` valid pointers.
enum DrlaStatus drla_estimate_asn(const char *spec_json,
                                  const struct DrlaRiskParams *params,
                                  uint64_t *out_draws);

// Message for the last failed call on this thread, or null if it succeeded.
// The pointer stays valid until the next call into this library on the same thread.
const char *drla_last_error_message(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void drla_string_free(char *s);

// Library version as a static C string.
const char *drla_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DELEGATE_RLA_H */
