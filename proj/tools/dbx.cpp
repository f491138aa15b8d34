// dbx: experiment runner CLI for the dropbn shared library.
//
// Verbs:
//   train --config PATH [--seed N] [--out DIR] [--override k.ey=value ...]
//   sweep --config PATH [--seed N] [--out DIR] [--override ...]
//   eval  --run DIR [--seed N]
//   plot  --run DIR
//
// Exit code 0 on success; on failure a single structured line
// `error: <category>: <message>` goes to stderr and the code is nonzero.

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dropbn.h"

namespace {

int fail(dbn_status status) {
  std::fprintf(stderr, "error: %s: %s\n", dbn_status_name(status),
               dbn_last_error());
  return static_cast<int>(status);
}

struct ExperimentDeleter {
  void operator()(dbn_experiment* e) const { dbn_experiment_destroy(e); }
};
using ExperimentPtr = std::unique_ptr<dbn_experiment, ExperimentDeleter>;

int run_configured(const std::string& config_path, std::uint64_t seed,
                   bool seed_set, const std::string& out_dir,
                   const std::vector<std::string>& overrides, bool sweep) {
  dbn_experiment* raw = nullptr;
  dbn_status status = dbn_experiment_create(config_path.c_str(), &raw);
  if (status != DBN_OK) return fail(status);
  ExperimentPtr experiment(raw);

  for (const std::string& assignment : overrides) {
    status = dbn_experiment_override(experiment.get(), assignment.c_str());
    if (status != DBN_OK) return fail(status);
  }
  if (seed_set) {
    status = dbn_experiment_set_seed(experiment.get(), seed);
    if (status != DBN_OK) return fail(status);
  }
  if (!out_dir.empty()) {
    status = dbn_experiment_set_output_dir(experiment.get(), out_dir.c_str());
    if (status != DBN_OK) return fail(status);
  }

  status = sweep ? dbn_experiment_sweep(experiment.get())
                 : dbn_experiment_run(experiment.get());
  if (status != DBN_OK) return fail(status);

  char* report = nullptr;
  status = dbn_experiment_report_json(experiment.get(), &report);
  if (status != DBN_OK) return fail(status);
  std::printf("%s\n", report);
  dbn_string_free(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drop-Bottleneck experiment runner"};
  app.require_subcommand(1);

  std::string config_path, out_dir, run_dir;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;

  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")
        ->required();
    cmd->add_option("--seed", seed, "seed for every random stream");
    cmd->add_option("--out", out_dir, "output directory override");
    cmd->add_option("--override", overrides,
                    "config override key.path=value (repeatable)");
  };

  CLI::App* train = app.add_subcommand("train", "run the experiment");
  add_run_options(train);
  CLI::App* sweep =
      app.add_subcommand("sweep", "run once per train.beta_grid entry");
  add_run_options(sweep);

  CLI::App* eval = app.add_subcommand("eval", "re-evaluate a finished run");
  eval->add_option("--run", run_dir, "run directory")->required();
  eval->add_option("--seed", seed, "evaluation seed");

  CLI::App* plot = app.add_subcommand("plot", "render SVG plots for a run");
  plot->add_option("--run", run_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (train->parsed() || sweep->parsed()) {
    const bool seed_set = (train->parsed() ? train : sweep)
                              ->count("--seed") > 0;
    return run_configured(config_path, seed, seed_set, out_dir, overrides,
                          sweep->parsed());
  }
  if (eval->parsed()) {
    char* report = nullptr;
    const dbn_status status =
        dbn_evaluate_run(run_dir.c_str(), seed, &report);
    if (status != DBN_OK) return fail(status);
    std::printf("%s\n", report);
    dbn_string_free(report);
    return 0;
  }
  if (plot->parsed()) {
    const dbn_status status = dbn_emit_plots(run_dir.c_str());
    if (status != DBN_OK) return fail(status);
    std::printf("plots written under %s/plots\n", run_dir.c_str());
    return 0;
  }
  return 1;
}
