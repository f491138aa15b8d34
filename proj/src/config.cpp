#include "dropbn/config.hpp"

#include <filesystem>
#include <fstream>

#include "dropbn/errors.hpp"

namespace dropbn {

using nlohmann::json;

namespace {

json::json_pointer pointer_of(const std::string& dotted) {
  std::string path = "/";
  for (char c : dotted) path += c == '.' ? '/' : c;
  return json::json_pointer(path);
}

const json* lookup(const json& root, const std::string& dotted) {
  const json::json_pointer ptr = pointer_of(dotted);
  if (!root.contains(ptr)) return nullptr;
  return &root.at(ptr);
}

ExperimentConfig finish(json root) {
  ExperimentConfig config;
  config.root = std::move(root);
  require(config.root.contains("experiment") &&
              config.root["experiment"].contains("kind"),
          ErrorCode::kConfig, "config: experiment.kind is required");
  config.kind = config.root["experiment"]["kind"].get<std::string>();
  if (config.root.contains("seed"))
    config.seed = config.root["seed"].get<std::uint64_t>();
  if (config.root.contains("output") && config.root["output"].contains("dir"))
    config.out_dir = config.root["output"]["dir"].get<std::string>();
  return config;
}

}  // namespace

double ExperimentConfig::num(const std::string& p, double fallback) const {
  const json* v = lookup(root, p);
  return v && v->is_number() ? v->get<double>() : fallback;
}

int ExperimentConfig::integer(const std::string& p, int fallback) const {
  const json* v = lookup(root, p);
  return v && v->is_number() ? v->get<int>() : fallback;
}

bool ExperimentConfig::flag(const std::string& p, bool fallback) const {
  const json* v = lookup(root, p);
  return v && v->is_boolean() ? v->get<bool>() : fallback;
}

std::string ExperimentConfig::text(const std::string& p,
                                   const std::string& fallback) const {
  const json* v = lookup(root, p);
  return v && v->is_string() ? v->get<std::string>() : fallback;
}

std::vector<double> ExperimentConfig::numbers(const std::string& p) const {
  const json* v = lookup(root, p);
  std::vector<double> out;
  if (v && v->is_array())
    for (const auto& item : *v) out.push_back(item.get<double>());
  return out;
}

std::vector<int> ExperimentConfig::integers(
    const std::string& p, const std::vector<int>& fallback) const {
  const json* v = lookup(root, p);
  if (!v || !v->is_array()) return fallback;
  std::vector<int> out;
  for (const auto& item : *v) out.push_back(item.get<int>());
  return out;
}

std::vector<std::string> ExperimentConfig::texts(const std::string& p) const {
  const json* v = lookup(root, p);
  std::vector<std::string> out;
  if (v && v->is_array())
    for (const auto& item : *v) out.push_back(item.get<std::string>());
  return out;
}

bool ExperimentConfig::has(const std::string& p) const {
  return lookup(root, p) != nullptr;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kConfig, "cannot open config: " + path);
  json root;
  try {
    root = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw_error(ErrorCode::kConfig,
                "config parse failure in " + path + ": " + e.what());
  }
  return finish(std::move(root));
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw_error(ErrorCode::kConfig,
                std::string("config parse failure: ") + e.what());
  }
  return finish(std::move(root));
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, ErrorCode::kConfig,
          "override must look like key.path=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;  // plain string
  }
  config.root[pointer_of(key)] = parsed;
  // re-resolve derived fields
  if (key == "experiment.kind") config.kind = parsed.get<std::string>();
  if (key == "seed") config.seed = parsed.get<std::uint64_t>();
  if (key == "output.dir") config.out_dir = parsed.get<std::string>();
}

void write_config_echo(const ExperimentConfig& config,
                       const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create output dir: " + out_dir);
  json echo = config.root;
  echo["seed"] = config.seed;
  echo["output"]["dir"] = out_dir;
  std::ofstream out(std::filesystem::path(out_dir) / "config.echo.json");
  require(out.good(), ErrorCode::kIo, "cannot write config echo");
  out << echo.dump(2) << "\n";
}

ExperimentConfig load_config_echo(const std::string& run_dir) {
  return load_config(
      (std::filesystem::path(run_dir) / "config.echo.json").string());
}

}  // namespace dropbn
