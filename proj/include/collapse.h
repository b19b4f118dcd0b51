#ifndef COLLAPSE_H
#define COLLAPSE_H

/*
 * C interface to the collapse library: generational fit/sample experiments,
 * the exact Markov analysis of the discrete chain and the acceptance checks.
 *
 * Every function that can fail returns a collapse_status. On failure a
 * message is available from collapse_last_error() on the same thread until
 * the next failing call. Strings returned through char** are allocated by
 * the library and released with collapse_string_free().
 */

#include <stddef.h>
#include <stdint.h>

#if defined(COLLAPSE_BUILDING_LIBRARY)
#define COLLAPSE_API __attribute__((visibility("default")))
#else
#define COLLAPSE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum collapse_status {
    COLLAPSE_OK = 0,
    COLLAPSE_E_INVALID_ARGUMENT = 1,
    COLLAPSE_E_INSUFFICIENT_DATA = 2,
    COLLAPSE_E_INVALID_MODEL = 3,
    COLLAPSE_E_DEGENERATE_CUTOFF = 4,
    COLLAPSE_E_GRID_TOO_SMALL = 5,
    COLLAPSE_E_TOO_LARGE = 6,
    COLLAPSE_E_NUMERICAL = 7,
    COLLAPSE_E_CONFIG = 8,
    COLLAPSE_E_IO = 9,
    COLLAPSE_E_NULL_POINTER = 10,
    COLLAPSE_E_OUT_OF_MEMORY = 11,
    COLLAPSE_E_INTERNAL = 12
} collapse_status;

typedef enum collapse_output_kind {
    COLLAPSE_OUTPUT_TRAJECTORIES = 0,
    COLLAPSE_OUTPUT_SUMMARY = 1,
    COLLAPSE_OUTPUT_METADATA = 2
} collapse_output_kind;

typedef struct collapse_experiment collapse_experiment;
typedef struct collapse_results collapse_results;
typedef struct collapse_markov collapse_markov;
typedef struct collapse_verify_report collapse_verify_report;

/* Library information */
COLLAPSE_API const char* collapse_version(void);
COLLAPSE_API const char* collapse_rng_algorithm(void);
COLLAPSE_API const char* collapse_status_name(collapse_status status);
COLLAPSE_API const char* collapse_last_error(void);
COLLAPSE_API void collapse_string_free(char* s);

/* Experiments */
COLLAPSE_API collapse_status collapse_experiment_load(const char* path, collapse_experiment** out);
COLLAPSE_API collapse_status collapse_experiment_parse(const char* yaml_text, const char* source_name,
                                                       collapse_experiment** out);
COLLAPSE_API void collapse_experiment_free(collapse_experiment* exp);

COLLAPSE_API collapse_status collapse_experiment_set_seed(collapse_experiment* exp, uint64_t seed);
COLLAPSE_API collapse_status collapse_experiment_set_replicates(collapse_experiment* exp, size_t replicates);
COLLAPSE_API collapse_status collapse_experiment_set_threads(collapse_experiment* exp, size_t threads);
COLLAPSE_API collapse_status collapse_experiment_set_output_dir(collapse_experiment* exp, const char* dir);
/* format: "csv" or "json" */
COLLAPSE_API collapse_status collapse_experiment_set_format(collapse_experiment* exp, const char* format);

/* 16 hex digits identifying every result-affecting setting. */
COLLAPSE_API collapse_status collapse_experiment_digest(const collapse_experiment* exp, char** out);
COLLAPSE_API collapse_status collapse_experiment_generations(const collapse_experiment* exp, size_t* out);
COLLAPSE_API collapse_status collapse_experiment_output_path(const collapse_experiment* exp,
                                                             collapse_output_kind kind, char** out);

/* Runs every replicate. The results keep a snapshot of the experiment. */
COLLAPSE_API collapse_status collapse_experiment_run(const collapse_experiment* exp, collapse_results** out);
COLLAPSE_API void collapse_results_free(collapse_results* res);

COLLAPSE_API collapse_status collapse_results_replicates(const collapse_results* res, size_t* out);
/* Risk of replicate r at generation g (record g is the fit of D_g). */
COLLAPSE_API collapse_status collapse_results_risk(const collapse_results* res, size_t replicate, size_t generation,
                                                   double* out);
COLLAPSE_API collapse_status collapse_results_render(const collapse_results* res, collapse_output_kind kind,
                                                     char** out);
/* Writes trajectories, summary and metadata atomically to the output dir. */
COLLAPSE_API collapse_status collapse_results_write(const collapse_results* res);

/* Exact Markov analysis of the discrete fit/resample chain */
COLLAPSE_API collapse_status collapse_markov_create(uint32_t m, uint32_t k, collapse_markov** out);
COLLAPSE_API void collapse_markov_free(collapse_markov* chain);
COLLAPSE_API size_t collapse_markov_state_count(const collapse_markov* chain);
COLLAPSE_API size_t collapse_markov_transient_count(const collapse_markov* chain);
/* counts: k entries summing to m. */
COLLAPSE_API collapse_status collapse_markov_state_index(const collapse_markov* chain, const uint32_t* counts,
                                                         size_t k, size_t* out);
/* probs: k entries; probs[j] is the probability of fixing on category j. */
COLLAPSE_API collapse_status collapse_markov_absorption(const collapse_markov* chain, const uint32_t* counts,
                                                        size_t k, double* probs, double* expected_time);
/* out: state_count² entries, row-major, out[to * n + from]. */
COLLAPSE_API collapse_status collapse_markov_limit_matrix(const collapse_markov* chain, double* out, size_t len);
/* format: "text", "csv" or "json". */
COLLAPSE_API collapse_status collapse_markov_report(const collapse_markov* chain, const uint32_t* counts, size_t k,
                                                    const char* format, int include_limit, char** out);

/* Acceptance checks */
/* Newline-separated check names. */
COLLAPSE_API collapse_status collapse_verify_check_names(char** out);
COLLAPSE_API collapse_status collapse_verify_run_file(const char* path, collapse_verify_report** out);
COLLAPSE_API collapse_status collapse_verify_run_text(const char* yaml_text, const char* source_name,
                                                      collapse_verify_report** out);
COLLAPSE_API void collapse_verify_report_free(collapse_verify_report* report);
COLLAPSE_API int collapse_verify_report_passed(const collapse_verify_report* report);
/* format: "text" or "json" */
COLLAPSE_API collapse_status collapse_verify_report_render(const collapse_verify_report* report, const char* format,
                                                           char** out);

/* Closed forms for a Gaussian of variance sigma_sq and sizes M_0..M_{n-1} */
COLLAPSE_API collapse_status collapse_predicted_variance(double sigma_sq, const uint64_t* sizes, size_t n,
                                                         double* out);
COLLAPSE_API collapse_status collapse_predicted_risk_mean(double sigma_sq, const uint64_t* sizes, size_t n,
                                                          double* out);
COLLAPSE_API collapse_status collapse_w2_gaussian1d(double mean_a, double var_a, double mean_b, double var_b,
                                                    double* out);

#ifdef __cplusplus
}
#endif

#endif
