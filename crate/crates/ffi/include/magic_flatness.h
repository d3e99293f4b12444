#ifndef MAGIC_FLATNESS_H
#define MAGIC_FLATNESS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MfProtocol {
  MF_PROTOCOL_GLOBAL = 0,
  MF_PROTOCOL_LOCAL_WALK = 1,
  MF_PROTOCOL_LAYER_WALK = 2,
  MF_PROTOCOL_EXACT = 3,
} MfProtocol;

typedef enum MfStatus {
  MF_STATUS_OK = 0,
  MF_STATUS_INVALID_INPUT = 1,
  MF_STATUS_DIMENSION_MISMATCH = 2,
  MF_STATUS_NOT_UNITARY = 3,
  MF_STATUS_UNSUPPORTED = 4,
  MF_STATUS_SINGULAR_MODEL = 5,
  MF_STATUS_NULL_POINTER = 6,
  MF_STATUS_PANIC = 7,
} MfStatus;

/**
 * Opaque pure state.
 */
typedef struct MfState MfState;

typedef struct MfOrbitEstimate {
  double mean_flatness;
  double std_error;
  uint64_t n_samples;
  double m2_estimate;
  double m2_std_error;
  bool out_of_range;
} MfOrbitEstimate;

typedef struct MfM2Estimate {
  double m2;
  double std_error;
  bool out_of_range;
} MfM2Estimate;

typedef struct MfDeviceRecord {
  double theta;
  double f_dig;
  double f_corr;
  double f_ex;
  double sigma_stat;
  double sigma_dig;
  uint64_t clipped_realizations;
} MfDeviceRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mf_version(void);

/**
 * Message of the last failed call on this thread, or NULL if the last call
 * succeeded. Free with [`mf_string_free`].
 */
char *mf_last_error_message(void);

/**
 * # Safety
 * `s` must come from [`mf_last_error_message`] and not have been freed.
 */
void mf_string_free(char *s);

/**
 * `|0…0⟩` on `n_qubits` qubits.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum MfStatus mf_state_zero(size_t n_qubits, struct MfState **out);

/**
 * Basis state from a bit string whose character `k` is qubit `k`.
 *
 * # Safety
 * `bits` must be a NUL-terminated string; `out` valid for one pointer write.
 */
enum MfStatus mf_state_basis(size_t n_qubits, const char *bits, struct MfState **out);

/**
 * `(cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩)^{⊗n}`.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum MfStatus mf_state_bloch_product(double theta,
                                     double phi,
                                     size_t n_qubits,
                                     struct MfState **out);

/**
 * Haar-random state drawn from `seed`.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum MfStatus mf_state_haar(size_t n_qubits, uint64_t seed, struct MfState **out);

/**
 * State from `len` complex amplitudes split into real and imaginary arrays.
 * `len` must be a power of two and the vector normalized within 1e-10.
 *
 * # Safety
 * `re` and `im` must each point to `len` readable doubles.
 */
enum MfStatus mf_state_from_amplitudes(const double *re,
                                       const double *im,
                                       size_t len,
                                       struct MfState **out);

/**
 * # Safety
 * `state` must be a live handle; `out` valid for one pointer write.
 */
enum MfStatus mf_state_clone(const struct MfState *state, struct MfState **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `state` must be NULL or a live handle not used afterwards.
 */
void mf_state_free(struct MfState *state);

/**
 * Qubit count, or 0 for NULL.
 *
 * # Safety
 * `state` must be NULL or a live handle.
 */
size_t mf_state_n_qubits(const struct MfState *state);

/**
 * Writes the `2^N` basis probabilities; `len` must equal `2^N`.
 *
 * # Safety
 * `state` must be a live handle; `out` must point to `len` writable doubles.
 */
enum MfStatus mf_state_probabilities(const struct MfState *state, double *out, size_t len);

/**
 * Applies `exp(−iθ/2 X_i X_j)` in place.
 *
 * # Safety
 * `state` must be a live handle.
 */
enum MfStatus mf_state_apply_rxx(struct MfState *state, double theta, size_t i, size_t j);

/**
 * Applies a uniformly random Clifford drawn from `seed` in place.
 *
 * # Safety
 * `state` must be a live handle.
 */
enum MfStatus mf_state_apply_random_clifford(struct MfState *state, uint64_t seed);

/**
 * `I_q = Σ p^q`.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for one write.
 */
enum MfStatus mf_ipr(const struct MfState *state, double q, double *out);

/**
 * Participation entropy `S_q` in bits.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for one write.
 */
enum MfStatus mf_participation_entropy(const struct MfState *state, double q, double *out);

/**
 * Stabilizer entropy `M_q` in bits.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for one write.
 */
enum MfStatus mf_stabilizer_entropy(const struct MfState *state, double q, double *out);

/**
 * Multifractal flatness `I_3 − I_2²`.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for one write.
 */
enum MfStatus mf_flatness(const struct MfState *state, double *out);

/**
 * Clifford-orbit average of the flatness. `MF_PROTOCOL_EXACT` ignores
 * `n_samples` and `seed` and needs at most two qubits.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for one write.
 */
enum MfStatus mf_orbit_average(const struct MfState *state,
                               enum MfProtocol protocol,
                               uint64_t n_samples,
                               uint64_t seed,
                               struct MfOrbitEstimate *out);

/**
 * Recovers `M₂` from a mean flatness and its standard error.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum MfStatus mf_estimate_m2(double mean_flatness,
                             double std_error,
                             size_t d,
                             struct MfM2Estimate *out);

/**
 * `2(1 − 2^{−M₂})/((d+1)(d+2))`.
 */
double mf_theorem_rhs(double m2, size_t d);

/**
 * Haar average of the flatness.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum MfStatus mf_haar_mean_flatness(uint64_t d, double *out);

/**
 * Haar standard deviation of the flatness of a single random state.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum MfStatus mf_haar_flatness_std(uint64_t d, double *out);

/**
 * Simulated two-qubit readout experiment on `R_XX(θ)|00⟩`, one record per
 * angle. `n_shots == 0` uses exact probabilities. With `clip` negative
 * mitigated entries are zeroed and the vector renormalized before the flatness.
 *
 * # Safety
 * `thetas` must point to `n_thetas` readable doubles and `out` to
 * `n_thetas` writable records.
 */
enum MfStatus mf_device_experiment(const double *thetas,
                                   size_t n_thetas,
                                   size_t n_realizations,
                                   uint64_t n_shots,
                                   double p,
                                   double q,
                                   uint64_t seed,
                                   bool clip,
                                   struct MfDeviceRecord *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MAGIC_FLATNESS_H */
