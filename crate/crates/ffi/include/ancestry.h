#ifndef ANCESTRY_H
#define ANCESTRY_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AncStatus {
  ANC_STATUS_OK = 0,
  ANC_STATUS_INVALID_ARGUMENT = 1,
  ANC_STATUS_NULL_POINTER = 2,
  ANC_STATUS_DATA_MISMATCH = 3,
  ANC_STATUS_NUMERIC = 4,
  ANC_STATUS_PANIC = 5,
} AncStatus;

/**
 * A finished importance-sampling run.
 */
typedef struct AncIsRun AncIsRun;

/**
 * An observed haplotype configuration with its number of segregating sites.
 */
typedef struct AncSample AncSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Owned by the library;
 * valid until the next failing call on the same thread.
 */
const char *anc_last_error_message(void);

/**
 * # Safety
 * `counts` must point to `len` readable values; `out` must be writable.
 */
enum AncStatus anc_sample_new(const uint32_t *counts,
                              size_t len,
                              uint32_t s,
                              struct AncSample **out);

/**
 * # Safety
 * `sample` must come from [`anc_sample_new`] and not be used afterwards.
 */
void anc_sample_free(struct AncSample *sample);

/**
 * # Safety
 * Valid handle and writable out-pointers.
 */
enum AncStatus anc_sample_size(const struct AncSample *sample, uint32_t *n, uint32_t *k);

/**
 * ln of the Ewens sampling formula probability of the unordered configuration.
 *
 * # Safety
 * Valid handle and writable out-pointer.
 */
enum AncStatus anc_esf_log_probability(const struct AncSample *sample, double theta, double *out);

/**
 * P(S_n = s).
 *
 * # Safety
 * Writable out-pointer.
 */
enum AncStatus anc_seg_sites_pmf(uint32_t n, double theta, uint32_t s, double *out);

/**
 * P(K_n = k).
 *
 * # Safety
 * Writable out-pointer.
 */
enum AncStatus anc_num_alleles_pmf(uint32_t n, double theta, uint32_t k, double *out);

/**
 * P(A_n^θ(t) = k); θ = 0 gives the plain coalescent line count.
 *
 * # Safety
 * Writable out-pointer.
 */
enum AncStatus anc_ancestors_pmf(uint32_t n, double theta, double t, uint32_t k, double *out);

/**
 * E[A_n(t) | S_n = r].
 *
 * # Safety
 * Writable out-pointer.
 */
enum AncStatus anc_cond_mean_ancestors(uint32_t n, double theta, double t, uint32_t r, double *out);

/**
 * # Safety
 * Writable out-pointer.
 */
enum AncStatus anc_watterson_theta(uint64_t s, uint64_t n, double *out);

/**
 * # Safety
 * Writable out-pointer.
 */
enum AncStatus anc_ewens_mle_theta(uint64_t k, uint64_t n, double *out);

/**
 * # Safety
 * Writable out-pointer.
 */
enum AncStatus anc_tajimas_d(double pi, uint64_t s, uint64_t n, double *out);

/**
 * P(Z ≥ observed) for Z ~ Poisson(mean).
 *
 * # Safety
 * Writable out-pointer.
 */
enum AncStatus anc_poisson_tail(uint64_t observed, double mean, double *out);

/**
 * Algorithm 4 posterior means of A_n(t) and S_n(t) given S_n = s, θ fixed,
 * constant population size.
 *
 * # Safety
 * Writable out-pointers.
 */
enum AncStatus anc_reject_means(uint32_t n,
                                uint32_t s,
                                double theta,
                                double t,
                                uint64_t accepted,
                                uint64_t seed,
                                double *mean_ancestors,
                                double *mean_standing);

/**
 * Runs the importance sampler. `beta` = 0 is the constant-size model.
 * With `with_ages` nonzero, event times and allele ages are estimated too.
 *
 * # Safety
 * Valid sample handle; writable `out`.
 */
enum AncStatus anc_is_run(const struct AncSample *sample,
                          double theta,
                          double beta,
                          uint64_t replicates,
                          uint64_t seed,
                          int32_t with_ages,
                          struct AncIsRun **out);

/**
 * # Safety
 * `run` must come from [`anc_is_run`] and not be used afterwards.
 */
void anc_is_free(struct AncIsRun *run);

/**
 * Unordered likelihood p(n;s)/Π α_j! with its standard error and ESS.
 *
 * # Safety
 * Valid handle; writable out-pointers.
 */
enum AncStatus anc_is_likelihood(const struct AncIsRun *run,
                                 double *mean,
                                 double *std_error,
                                 double *ess);

/**
 * # Safety
 * Valid handle from a run with ages; writable out-pointers.
 */
enum AncStatus anc_is_tmrca(const struct AncIsRun *run, double *mean, double *std_error);

/**
 * Mean age of haplotype `index` (input order, from 0).
 *
 * # Safety
 * Valid handle from a run with ages; writable out-pointers.
 */
enum AncStatus anc_is_allele_age(const struct AncIsRun *run,
                                 size_t index,
                                 double *mean,
                                 double *std_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANCESTRY_H */
