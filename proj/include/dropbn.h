/* dropbn: Drop-Bottleneck library and experiment harness, C interface.
 *
 * All functions return dbn_status; DBN_OK is 0. On failure a thread-local
 * message is retrievable via dbn_last_error(). Objects are opaque handles
 * created and destroyed through this interface.
 */
#ifndef DROPBN_H_
#define DROPBN_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dbn_status {
  DBN_OK = 0,
  DBN_ERR_INVALID_ARGUMENT = 1,
  DBN_ERR_DIMENSION_MISMATCH = 2,
  DBN_ERR_DEGENERATE_DROP = 3,
  DBN_ERR_EMPTY_REPRESENTATION = 4,
  DBN_ERR_INSUFFICIENT_SAMPLES = 5,
  DBN_ERR_ORACLE_TOO_LARGE = 6,
  DBN_ERR_CONFIG = 7,
  DBN_ERR_IO = 8,
  DBN_ERR_RUNTIME = 9
} dbn_status;

const char* dbn_status_name(dbn_status status);

/* Message for the most recent failure on this thread; never NULL. */
const char* dbn_last_error(void);

/* ---- random streams ---- */

typedef struct dbn_rng dbn_rng;

dbn_status dbn_rng_create(uint64_t seed, dbn_rng** out);
void dbn_rng_destroy(dbn_rng* rng);

/* ---- drop-bottleneck core ---- */

typedef struct dbn_drop_params dbn_drop_params;

/* Logits drawn Uniform(logit_lo, logit_hi); p_i = sigmoid(logit_i). */
dbn_status dbn_drop_params_create(size_t dim, double logit_lo,
                                  double logit_hi, double temperature,
                                  dbn_rng* rng, dbn_drop_params** out);
dbn_status dbn_drop_params_from_logits(const double* logits, size_t dim,
                                       double temperature,
                                       dbn_drop_params** out);
void dbn_drop_params_destroy(dbn_drop_params* params);

dbn_status dbn_drop_params_dim(const dbn_drop_params* params, size_t* out);
dbn_status dbn_drop_probabilities(const dbn_drop_params* params,
                                  double* out /* dim */);
dbn_status dbn_scale_factor(const dbn_drop_params* params, double* out);

typedef enum dbn_mask_mode {
  DBN_MASK_HARD = 0,
  DBN_MASK_RELAXED = 1
} dbn_mask_mode;

/* x is row-major n x dim. z_out is row-major n x dim. mask_out may be NULL. */
dbn_status dbn_compress_stochastic(const dbn_drop_params* params,
                                   const double* x, size_t n, size_t dim,
                                   dbn_mask_mode mode, dbn_rng* rng,
                                   double* z_out, double* mask_out,
                                   double* scale_out);
dbn_status dbn_compress_deterministic(const dbn_drop_params* params,
                                      const double* x, size_t n, size_t dim,
                                      double* z_out, double* scale_out);

/* Per-dimension binned entropies (nats) of a row-major n x dim matrix. */
dbn_status dbn_entropy_binning(const double* x, size_t n, size_t dim,
                               int bin_count, double* entropies_out);

/* sum_i entropies[i] * (1 - p_i) for the params' drop probabilities. */
dbn_status dbn_compression_term(const dbn_drop_params* params,
                                const double* entropies, size_t dim,
                                double* out);

/* Jensen-Shannon mutual-information estimate from discriminator scores. */
dbn_status dbn_jsd_mi_estimate(const double* joint_scores, size_t n_joint,
                               const double* marginal_scores,
                               size_t n_marginal, double* out);

/* ---- experiment harness ---- */

typedef struct dbn_experiment dbn_experiment;

dbn_status dbn_experiment_create(const char* config_path,
                                 dbn_experiment** out);
dbn_status dbn_experiment_set_seed(dbn_experiment* experiment, uint64_t seed);
dbn_status dbn_experiment_set_output_dir(dbn_experiment* experiment,
                                         const char* dir);
/* "key.path=value"; value parsed as JSON when possible, else a string. */
dbn_status dbn_experiment_override(dbn_experiment* experiment,
                                   const char* assignment);

/* Runs the configured experiment (the `train` verb). */
dbn_status dbn_experiment_run(dbn_experiment* experiment);
/* Runs the experiment once per train.beta_grid entry (the `sweep` verb). */
dbn_status dbn_experiment_sweep(dbn_experiment* experiment);

/* Report of the last run/sweep as a JSON string; caller frees. */
dbn_status dbn_experiment_report_json(const dbn_experiment* experiment,
                                      char** out);
void dbn_experiment_destroy(dbn_experiment* experiment);

/* Re-evaluates a finished run directory; report JSON goes to *out. */
dbn_status dbn_evaluate_run(const char* run_dir, uint64_t seed, char** out);

/* Renders SVG plots from the CSVs of a finished run directory. */
dbn_status dbn_emit_plots(const char* run_dir);

void dbn_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* DROPBN_H_ */
