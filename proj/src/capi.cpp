#include "dropbn.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "dropbn/core.hpp"
#include "dropbn/errors.hpp"
#include "dropbn/experiments.hpp"
#include "dropbn/mi.hpp"
#include "dropbn/rng.hpp"

namespace {

thread_local std::string g_last_error = "ok";

dbn_status status_of(const dropbn::Error& e) {
  switch (e.code()) {
    case dropbn::ErrorCode::kInvalidArgument:
      return DBN_ERR_INVALID_ARGUMENT;
    case dropbn::ErrorCode::kDimensionMismatch:
      return DBN_ERR_DIMENSION_MISMATCH;
    case dropbn::ErrorCode::kDegenerateDrop:
      return DBN_ERR_DEGENERATE_DROP;
    case dropbn::ErrorCode::kEmptyRepresentation:
      return DBN_ERR_EMPTY_REPRESENTATION;
    case dropbn::ErrorCode::kInsufficientSamples:
      return DBN_ERR_INSUFFICIENT_SAMPLES;
    case dropbn::ErrorCode::kOracleTooLarge:
      return DBN_ERR_ORACLE_TOO_LARGE;
    case dropbn::ErrorCode::kConfig:
      return DBN_ERR_CONFIG;
    case dropbn::ErrorCode::kIo:
      return DBN_ERR_IO;
    case dropbn::ErrorCode::kRuntime:
      return DBN_ERR_RUNTIME;
  }
  return DBN_ERR_RUNTIME;
}

template <typename Fn>
dbn_status guarded(Fn&& fn) {
  try {
    fn();
    return DBN_OK;
  } catch (const dropbn::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DBN_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown failure";
    return DBN_ERR_RUNTIME;
  }
}

dbn_status invalid(const char* message) {
  g_last_error = message;
  return DBN_ERR_INVALID_ARGUMENT;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>>
map_rows(const double* x, size_t n, size_t dim) {
  return {x, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim)};
}

void write_rows(double* out, const dropbn::Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out[i * m.cols() + j] = m(i, j);
}

}  // namespace

struct dbn_rng {
  dropbn::Rng rng;
};

struct dbn_drop_params {
  dropbn::DropParams params;
};

struct dbn_experiment {
  dropbn::ExperimentConfig config;
  nlohmann::json report;
};

extern "C" {

const char* dbn_status_name(dbn_status status) {
  switch (status) {
    case DBN_OK: return "ok";
    case DBN_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case DBN_ERR_DIMENSION_MISMATCH: return "dimension-mismatch";
    case DBN_ERR_DEGENERATE_DROP: return "degenerate-drop";
    case DBN_ERR_EMPTY_REPRESENTATION: return "empty-representation";
    case DBN_ERR_INSUFFICIENT_SAMPLES: return "insufficient-samples";
    case DBN_ERR_ORACLE_TOO_LARGE: return "oracle-too-large";
    case DBN_ERR_CONFIG: return "config";
    case DBN_ERR_IO: return "io";
    case DBN_ERR_RUNTIME: return "runtime";
  }
  return "unknown";
}

const char* dbn_last_error(void) { return g_last_error.c_str(); }

dbn_status dbn_rng_create(uint64_t seed, dbn_rng** out) {
  if (!out) return invalid("dbn_rng_create: out is NULL");
  return guarded([&]() { *out = new dbn_rng{dropbn::Rng(seed)}; });
}

void dbn_rng_destroy(dbn_rng* rng) { delete rng; }

dbn_status dbn_drop_params_create(size_t dim, double logit_lo,
                                  double logit_hi, double temperature,
                                  dbn_rng* rng, dbn_drop_params** out) {
  if (!out || !rng) return invalid("dbn_drop_params_create: NULL argument");
  return guarded([&]() {
    *out = new dbn_drop_params{dropbn::init_drop_params(
        static_cast<int>(dim), logit_lo, logit_hi, rng->rng, temperature)};
  });
}

dbn_status dbn_drop_params_from_logits(const double* logits, size_t dim,
                                       double temperature,
                                       dbn_drop_params** out) {
  if (!out || !logits)
    return invalid("dbn_drop_params_from_logits: NULL argument");
  return guarded([&]() {
    dropbn::require(dim >= 1, dropbn::ErrorCode::kInvalidArgument,
                    "drop params need at least one dimension");
    dropbn::require(temperature > 0.0, dropbn::ErrorCode::kInvalidArgument,
                    "temperature must be positive");
    dropbn::DropParams params;
    params.temperature = temperature;
    params.logits = Eigen::Map<const Eigen::VectorXd>(
        logits, static_cast<Eigen::Index>(dim));
    *out = new dbn_drop_params{std::move(params)};
  });
}

void dbn_drop_params_destroy(dbn_drop_params* params) { delete params; }

dbn_status dbn_drop_params_dim(const dbn_drop_params* params, size_t* out) {
  if (!params || !out) return invalid("dbn_drop_params_dim: NULL argument");
  *out = static_cast<size_t>(params->params.dim());
  return DBN_OK;
}

dbn_status dbn_drop_probabilities(const dbn_drop_params* params,
                                  double* out) {
  if (!params || !out) return invalid("dbn_drop_probabilities: NULL argument");
  return guarded([&]() {
    const dropbn::Vector p = dropbn::drop_probabilities(params->params);
    for (Eigen::Index i = 0; i < p.size(); ++i) out[i] = p(i);
  });
}

dbn_status dbn_scale_factor(const dbn_drop_params* params, double* out) {
  if (!params || !out) return invalid("dbn_scale_factor: NULL argument");
  return guarded([&]() {
    *out = dropbn::scale_factor(dropbn::drop_probabilities(params->params));
  });
}

dbn_status dbn_compress_stochastic(const dbn_drop_params* params,
                                   const double* x, size_t n, size_t dim,
                                   dbn_mask_mode mode, dbn_rng* rng,
                                   double* z_out, double* mask_out,
                                   double* scale_out) {
  if (!params || !x || !rng || !z_out)
    return invalid("dbn_compress_stochastic: NULL argument");
  return guarded([&]() {
    dropbn::Matrix input = map_rows(x, n, dim);
    dropbn::CompressedBatch z = dropbn::compress_stochastic(
        input, params->params,
        mode == DBN_MASK_HARD ? dropbn::MaskMode::kHard
                              : dropbn::MaskMode::kRelaxed,
        rng->rng);
    write_rows(z_out, z.values);
    if (mask_out) write_rows(mask_out, z.mask.values);
    if (scale_out) *scale_out = z.scale;
  });
}

dbn_status dbn_compress_deterministic(const dbn_drop_params* params,
                                      const double* x, size_t n, size_t dim,
                                      double* z_out, double* scale_out) {
  if (!params || !x || !z_out)
    return invalid("dbn_compress_deterministic: NULL argument");
  return guarded([&]() {
    dropbn::Matrix input = map_rows(x, n, dim);
    dropbn::CompressedBatch z =
        dropbn::compress_deterministic(input, params->params);
    write_rows(z_out, z.values);
    if (scale_out) *scale_out = z.scale;
  });
}

dbn_status dbn_entropy_binning(const double* x, size_t n, size_t dim,
                               int bin_count, double* entropies_out) {
  if (!x || !entropies_out) return invalid("dbn_entropy_binning: NULL");
  return guarded([&]() {
    dropbn::EntropyEstimate est =
        dropbn::estimate_entropy_binning(map_rows(x, n, dim), bin_count);
    for (Eigen::Index i = 0; i < est.entropies.size(); ++i)
      entropies_out[i] = est.entropies(i);
  });
}

dbn_status dbn_compression_term(const dbn_drop_params* params,
                                const double* entropies, size_t dim,
                                double* out) {
  if (!params || !entropies || !out)
    return invalid("dbn_compression_term: NULL argument");
  return guarded([&]() {
    Eigen::Map<const Eigen::VectorXd> h(entropies,
                                        static_cast<Eigen::Index>(dim));
    *out = dropbn::compression_term(
        h, dropbn::drop_probabilities(params->params));
  });
}

dbn_status dbn_jsd_mi_estimate(const double* joint_scores, size_t n_joint,
                               const double* marginal_scores,
                               size_t n_marginal, double* out) {
  if (!joint_scores || !marginal_scores || !out)
    return invalid("dbn_jsd_mi_estimate: NULL argument");
  return guarded([&]() {
    Eigen::Map<const Eigen::VectorXd> j(joint_scores,
                                        static_cast<Eigen::Index>(n_joint));
    Eigen::Map<const Eigen::VectorXd> m(
        marginal_scores, static_cast<Eigen::Index>(n_marginal));
    *out = dropbn::jsd_mi_estimate(j, m);
  });
}

dbn_status dbn_experiment_create(const char* config_path,
                                 dbn_experiment** out) {
  if (!config_path || !out)
    return invalid("dbn_experiment_create: NULL argument");
  return guarded([&]() {
    *out = new dbn_experiment{dropbn::load_config(config_path), {}};
  });
}

dbn_status dbn_experiment_set_seed(dbn_experiment* experiment, uint64_t seed) {
  if (!experiment) return invalid("dbn_experiment_set_seed: NULL");
  experiment->config.seed = seed;
  experiment->config.root["seed"] = seed;
  return DBN_OK;
}

dbn_status dbn_experiment_set_output_dir(dbn_experiment* experiment,
                                         const char* dir) {
  if (!experiment || !dir)
    return invalid("dbn_experiment_set_output_dir: NULL argument");
  experiment->config.out_dir = dir;
  experiment->config.root["output"]["dir"] = dir;
  return DBN_OK;
}

dbn_status dbn_experiment_override(dbn_experiment* experiment,
                                   const char* assignment) {
  if (!experiment || !assignment)
    return invalid("dbn_experiment_override: NULL argument");
  return guarded(
      [&]() { dropbn::apply_override(experiment->config, assignment); });
}

dbn_status dbn_experiment_run(dbn_experiment* experiment) {
  if (!experiment) return invalid("dbn_experiment_run: NULL");
  return guarded([&]() {
    experiment->report = dropbn::run_experiment(experiment->config).report;
  });
}

dbn_status dbn_experiment_sweep(dbn_experiment* experiment) {
  if (!experiment) return invalid("dbn_experiment_sweep: NULL");
  return guarded([&]() {
    experiment->report = dropbn::run_sweep(experiment->config).report;
  });
}

dbn_status dbn_experiment_report_json(const dbn_experiment* experiment,
                                      char** out) {
  if (!experiment || !out)
    return invalid("dbn_experiment_report_json: NULL argument");
  return guarded([&]() { *out = copy_string(experiment->report.dump(2)); });
}

void dbn_experiment_destroy(dbn_experiment* experiment) { delete experiment; }

dbn_status dbn_evaluate_run(const char* run_dir, uint64_t seed, char** out) {
  if (!run_dir || !out) return invalid("dbn_evaluate_run: NULL argument");
  return guarded([&]() {
    *out = copy_string(dropbn::evaluate_run(run_dir, seed).report.dump(2));
  });
}

dbn_status dbn_emit_plots(const char* run_dir) {
  if (!run_dir) return invalid("dbn_emit_plots: NULL argument");
  return guarded([&]() { dropbn::emit_plots(run_dir); });
}

void dbn_string_free(char* s) { std::free(s); }

}  // extern "C"
