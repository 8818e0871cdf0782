/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef CHANCODE_H
#define CHANCODE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result of every fallible call.
 */
typedef enum CcStatus {
  CC_STATUS_OK = 0,
  CC_STATUS_NULL_POINTER = 1,
  CC_STATUS_INVALID_UTF8 = 2,
  CC_STATUS_PARSE = 3,
  CC_STATUS_INVALID_INPUT = 4,
  CC_STATUS_NOT_TRACE_PRESERVING = 5,
  CC_STATUS_CONVERGENCE_FAILURE = 6,
  CC_STATUS_NOT_EQUAL_PRIORS = 7,
  CC_STATUS_NOT_RESOLVABLE = 8,
  CC_STATUS_DEGENERATE_PAIR = 9,
  CC_STATUS_BUFFER_TOO_SMALL = 10,
  CC_STATUS_PANIC = 11,
} CcStatus;

/*
 Opaque channel handle.
 */
typedef struct CcChannel CcChannel;

/*
 Opaque ensemble handle.
 */
typedef struct CcEnsemble CcEnsemble;

/*
 Opaque measurement handle.
 */
typedef struct CcPovm CcPovm;

/*
 Summary of an optimal-measurement computation.
 */
typedef struct CcDiscrimSummary {
  double p_guess;
  double certificate_residual;
  bool trivial;
} CcDiscrimSummary;

/*
 Outcome of the sufficient OMP check; `kappa` is NaN when no common factor exists.
 */
typedef struct CcOmpResult {
  bool holds;
  double kappa;
  double max_residual;
  size_t degenerate_pairs;
} CcOmpResult;

/*
 Exact protocol report.
 */
typedef struct CcProtocolReport {
  double p_id;
  double p_n;
  double p_n_fixed;
  double p_tn;
  double eta_fit;
  bool measurement_updated;
} CcProtocolReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the last failed call on this thread (empty after a success).
 The pointer stays valid until the next library call on the same thread.
 */
const char *cc_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *cc_version(void);

/*
 Builtin ensemble by name: "SZ", "SBB84" or "TRINE_MOD".
 */
enum CcStatus cc_ensemble_builtin(const char *name, struct CcEnsemble **out);

/*
 Ensemble from its JSON description.
 */
enum CcStatus cc_ensemble_from_json(const char *json, struct CcEnsemble **out);

enum CcStatus cc_ensemble_len(const struct CcEnsemble *e, size_t *out);

/*
 New ensemble with every state sent through the channel.
 */
enum CcStatus cc_ensemble_apply_channel(const struct CcEnsemble *e,
                                        const struct CcChannel *n,
                                        struct CcEnsemble **out);

void cc_ensemble_free(struct CcEnsemble *e);

enum CcStatus cc_channel_from_json(const char *json, struct CcChannel **out);

/*
 Flip channel; `axis` is 'X' or 'Y' (either case).
 */
enum CcStatus cc_channel_flip(char axis, double p, struct CcChannel **out);

/*
 Qubit depolarizing channel.
 */
enum CcStatus cc_channel_depolarizing(double eta, struct CcChannel **out);

/*
 Twirl over the 12-element tetrahedral design.
 */
enum CcStatus cc_channel_twirl(const struct CcChannel *n, struct CcChannel **out);

/*
 Depolarizing fit of a qubit channel; either output pointer may be null.
 */
enum CcStatus cc_channel_fit_depolarizing(const struct CcChannel *n, double *eta, double *residual);

/*
 Pauli transfer matrix, row-major into `out[16]`.
 */
enum CcStatus cc_channel_pauli_transfer(const struct CcChannel *n, double *out);

void cc_channel_free(struct CcChannel *n);

/*
 Certified optimal measurement; `summary` may be null.
 */
enum CcStatus cc_discriminate(const struct CcEnsemble *e,
                              struct CcPovm **out,
                              struct CcDiscrimSummary *summary);

enum CcStatus cc_povm_len(const struct CcPovm *m, size_t *out);

enum CcStatus cc_povm_dim(const struct CcPovm *m, size_t *out);

/*
 Copies element `index` row-major into `re` and `im`, each holding `cap` doubles.
 */
enum CcStatus cc_povm_element(const struct CcPovm *m,
                              size_t index,
                              double *re,
                              double *im,
                              size_t cap);

/*
 Measurement with every Bloch direction reversed.
 */
enum CcStatus cc_povm_update(const struct CcPovm *m, struct CcPovm **out);

enum CcStatus cc_success_probability(const struct CcEnsemble *e,
                                     const struct CcPovm *m,
                                     double *out);

void cc_povm_free(struct CcPovm *m);

enum CcStatus cc_omp_check(const struct CcEnsemble *e,
                           const struct CcChannel *n,
                           struct CcOmpResult *out);

/*
 Exact channel-coding protocol with the tetrahedral design and the
 certified optimal measurement of the noiseless ensemble.
 */
enum CcStatus cc_protocol_run_exact(const struct CcEnsemble *e,
                                    const struct CcChannel *n,
                                    struct CcProtocolReport *out);

/*
 Exact success probabilities of the experiment at one flip probability;
 `panel` is 'a' (Z states, X flips) or 'b' (BB84 states, Y flips).
 */
enum CcStatus cc_figure3_analytic(char panel, double p_f, double *p_n, double *p_tn);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHANCODE_H */
