#ifndef NECKFLOW_H
#define NECKFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NfStatus {
  NF_STATUS_OK = 0,
  NF_STATUS_NULL_POINTER = 1,
  NF_STATUS_INVALID_ARGUMENT = 2,
  NF_STATUS_DOMAIN = 3,
  NF_STATUS_INTEGRATION = 4,
  NF_STATUS_IO = 5,
  NF_STATUS_EXPERIMENT = 6,
  NF_STATUS_PANIC = 7,
} NfStatus;

// A metric family on the neck.
typedef struct NfFamily NfFamily;

// An integrated geodesic.
typedef struct NfTrace NfTrace;

// Cotangent state `(z, y, xi, eta)`.
typedef struct NfState {
  double z;
  double y;
  double xi;
  double eta;
} NfState;

typedef struct NfSample {
  double t;
  struct NfState state;
  // Twice the Hamiltonian.
  double energy;
  double angular_momentum;
  double angular_length;
} NfSample;

typedef struct NfTraceSummary {
  double final_t;
  struct NfState final_state;
  double angular_length;
  double max_energy_error;
  size_t steps;
  // 1 when the requested level was reached.
  int32_t reached;
} NfTraceSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *nf_version(void);

// Copies the calling thread's last error message into `buf` (always
// NUL-terminated when `len > 0`). Returns the full message length, or 0 when
// there is none.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t nf_last_error(char *buf, size_t len);

// Morse model family with scaling exponent `p`.
//
// # Safety
// `out_family` must be a valid pointer.
enum NfStatus nf_family_morse(uint32_t k, double delta, double p, struct NfFamily **out_family);

// Elliptic family with eccentricity parameter `delta`.
//
// # Safety
// `out_family` must be a valid pointer.
enum NfStatus nf_family_elliptic(uint32_t k, double delta, double p, struct NfFamily **out_family);

// Warped family with `h = 1 + amplitude cos y` and constant `s`.
//
// # Safety
// `out_family` must be a valid pointer.
enum NfStatus nf_family_warped(uint32_t k,
                               double p,
                               double amplitude,
                               double s,
                               struct NfFamily **out_family);

// # Safety
// `family` must be null or a handle from an `nf_family_*` constructor, freed once.
void nf_family_free(struct NfFamily *family);

// The Hamiltonian `H(z, y, xi, eta)` at parameter `eps`.
//
// # Safety
// `family`, `state` and `out_h` must be valid pointers.
enum NfStatus nf_hamiltonian(const struct NfFamily *family,
                             double eps,
                             const struct NfState *state,
                             double *out_h);

// Unit-speed state on the waist `z = 0` at angle `y`, leaving at angle `phi`
// from the waist circle.
//
// # Safety
// `family` and `out_state` must be valid pointers.
enum NfStatus nf_waist_state(const struct NfFamily *family,
                             double eps,
                             double y,
                             double phi,
                             struct NfState *out_state);

// Integrates from a unit-speed `start` until `z` reaches `z1` or `t_max`
// elapses, at relative tolerance `tol`.
//
// # Safety
// `family`, `start` and `out_trace` must be valid pointers.
enum NfStatus nf_integrate_to_level(const struct NfFamily *family,
                                    double eps,
                                    const struct NfState *start,
                                    double z1,
                                    double t_max,
                                    double tol,
                                    struct NfTrace **out_trace);

// # Safety
// `trace` must be null or a handle from [`nf_integrate_to_level`], freed once.
void nf_trace_free(struct NfTrace *trace);

// Number of recorded samples; 0 for a null handle.
//
// # Safety
// `trace` must be null or a live trace handle.
size_t nf_trace_len(const struct NfTrace *trace);

// # Safety
// `trace` and `out_sample` must be valid pointers.
enum NfStatus nf_trace_sample(const struct NfTrace *trace,
                              size_t index,
                              struct NfSample *out_sample);

// # Safety
// `trace` and `out_summary` must be valid pointers.
enum NfStatus nf_trace_summary(const struct NfTrace *trace, struct NfTraceSummary *out_summary);

// The winding constant `C_v` for profile exponent `p`, order `k` and
// `0 <= v < 1`.
//
// # Safety
// `out_value` must be a valid pointer.
enum NfStatus nf_winding_constant(double v, double p, uint32_t k, double *out_value);

// Runs an experiment from its JSON configuration and writes the artifacts
// into `out_dir`. `workers = 0` picks the configured or available count.
//
// # Safety
// `config_json` and `out_dir` must be NUL-terminated strings.
enum NfStatus nf_run_experiment(const char *config_json, const char *out_dir, size_t workers);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NECKFLOW_H */
