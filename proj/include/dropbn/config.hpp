#ifndef DROPBN_CONFIG_HPP_
#define DROPBN_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace dropbn {

// Experiment configuration: a JSON document (// comments allowed in the
// file) plus the seed and output directory resolved from the command line.
struct ExperimentConfig {
  nlohmann::json root;
  std::string kind;
  std::uint64_t seed = 1;
  std::string out_dir;

  double num(const std::string& pointer, double fallback) const;
  int integer(const std::string& pointer, int fallback) const;
  bool flag(const std::string& pointer, bool fallback) const;
  std::string text(const std::string& pointer,
                   const std::string& fallback) const;
  std::vector<double> numbers(const std::string& pointer) const;
  std::vector<int> integers(const std::string& pointer,
                            const std::vector<int>& fallback) const;
  std::vector<std::string> texts(const std::string& pointer) const;
  bool has(const std::string& pointer) const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);

// "a.b.c=value" with JSON-typed value when it parses, string otherwise.
void apply_override(ExperimentConfig& config, const std::string& assignment);

// Full-resolution echo written into every run directory.
void write_config_echo(const ExperimentConfig& config,
                       const std::string& out_dir);
ExperimentConfig load_config_echo(const std::string& run_dir);

}  // namespace dropbn

#endif  // DROPBN_CONFIG_HPP_
