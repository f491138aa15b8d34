#ifndef DROPBN_EXPERIMENTS_HPP_
#define DROPBN_EXPERIMENTS_HPP_

#include <cstdint>
#include <string>

#include <json.hpp>

#include "dropbn/config.hpp"

namespace dropbn {

struct RunResult {
  nlohmann::json report;
};

// Dispatches on experiment.kind, writes the config echo, metrics CSVs,
// report.json and a checkpoint under config.out_dir.
RunResult run_experiment(const ExperimentConfig& config);

RunResult run_feature_identification(const ExperimentConfig& config);
RunResult run_supervised(const ExperimentConfig& config);
RunResult run_feature_selection_baseline(const ExperimentConfig& config);
RunResult run_nuisance_probe(const ExperimentConfig& config);
RunResult run_exploration(const ExperimentConfig& config);

// Runs the configured experiment once per entry of train.beta_grid and
// aggregates a per-beta summary CSV in config.out_dir.
RunResult run_sweep(const ExperimentConfig& config);

// Re-evaluates a finished run from its config echo and checkpoint.
RunResult evaluate_run(const std::string& run_dir, std::uint64_t seed);

// Renders the CSVs found in run_dir into SVG files under run_dir/plots.
void emit_plots(const std::string& run_dir);

}  // namespace dropbn

#endif  // DROPBN_EXPERIMENTS_HPP_
