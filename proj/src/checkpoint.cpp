#include "dropbn/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "dropbn/errors.hpp"

namespace dropbn {

namespace fs = std::filesystem;
using nlohmann::json;

void Checkpoint::add(const std::string& name, const Eigen::MatrixXd& tensor) {
  require(!tensors_.count(name), ErrorCode::kInvalidArgument,
          "checkpoint: duplicate tensor name " + name);
  tensors_[name] = tensor;
}

void Checkpoint::add_scalar(const std::string& name, double value) {
  add(name, Eigen::MatrixXd::Constant(1, 1, value));
}

void Checkpoint::add_param(const std::string& name, const nn::Param& param) {
  add(name + ".value", param.value);
  add(name + ".m", param.m);
  add(name + ".v", param.v);
  add_scalar(name + ".steps", static_cast<double>(param.steps));
}

void Checkpoint::add_mlp(const std::string& prefix, const nn::Mlp& net) {
  for (size_t i = 0; i < net.layers.size(); ++i) {
    add_param(prefix + ".layer" + std::to_string(i) + ".weight",
              net.layers[i].weight);
    add_param(prefix + ".layer" + std::to_string(i) + ".bias",
              net.layers[i].bias);
  }
}

bool Checkpoint::has(const std::string& name) const {
  return tensors_.count(name) > 0;
}

const Eigen::MatrixXd& Checkpoint::tensor(const std::string& name) const {
  auto it = tensors_.find(name);
  require(it != tensors_.end(), ErrorCode::kInvalidArgument,
          "checkpoint: missing tensor " + name);
  return it->second;
}

double Checkpoint::scalar(const std::string& name) const {
  const Eigen::MatrixXd& t = tensor(name);
  require(t.size() == 1, ErrorCode::kInvalidArgument,
          "checkpoint: tensor is not a scalar: " + name);
  return t(0, 0);
}

void Checkpoint::read_param(const std::string& name, nn::Param& out) const {
  out.value = tensor(name + ".value");
  out.m = tensor(name + ".m");
  out.v = tensor(name + ".v");
  out.steps = static_cast<long>(scalar(name + ".steps"));
  out.grad = Eigen::MatrixXd::Zero(out.value.rows(), out.value.cols());
}

void Checkpoint::read_mlp(const std::string& prefix, nn::Mlp& out) const {
  for (size_t i = 0; i < out.layers.size(); ++i) {
    read_param(prefix + ".layer" + std::to_string(i) + ".weight",
               out.layers[i].weight);
    read_param(prefix + ".layer" + std::to_string(i) + ".bias",
               out.layers[i].bias);
  }
}

std::vector<std::string> Checkpoint::names() const {
  std::vector<std::string> out;
  for (const auto& [name, tensor] : tensors_) out.push_back(name);
  return out;
}

void Checkpoint::save(const std::string& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, "checkpoint: cannot create " + dir);

  json manifest;
  manifest["schema"] = 1;
  manifest["dtype"] = "float64";
  json entries = json::array();

  std::ofstream bin(fs::path(dir) / "tensors.bin", std::ios::binary);
  require(bin.good(), ErrorCode::kIo, "checkpoint: cannot write tensors.bin");
  std::size_t offset = 0;
  for (const auto& [name, tensor] : tensors_) {
    json entry;
    entry["name"] = name;
    entry["rows"] = tensor.rows();
    entry["cols"] = tensor.cols();
    entry["offset"] = offset;
    entries.push_back(entry);
    for (Eigen::Index r = 0; r < tensor.rows(); ++r) {
      for (Eigen::Index c = 0; c < tensor.cols(); ++c) {
        const double v = tensor(r, c);
        bin.write(reinterpret_cast<const char*>(&v), sizeof(double));
      }
    }
    offset += static_cast<std::size_t>(tensor.size()) * sizeof(double);
  }
  manifest["tensors"] = entries;
  bin.close();

  std::ofstream mf(fs::path(dir) / "manifest.json");
  require(mf.good(), ErrorCode::kIo, "checkpoint: cannot write manifest.json");
  mf << manifest.dump(2) << "\n";
}

Checkpoint Checkpoint::load(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  require(mf.good(), ErrorCode::kIo,
          "checkpoint: cannot open manifest in " + dir);
  json manifest = json::parse(mf);
  require(manifest.value("dtype", "") == "float64", ErrorCode::kIo,
          "checkpoint: unsupported dtype");

  std::ifstream bin(fs::path(dir) / "tensors.bin", std::ios::binary);
  require(bin.good(), ErrorCode::kIo,
          "checkpoint: cannot open tensors.bin in " + dir);

  Checkpoint ckpt;
  for (const auto& entry : manifest.at("tensors")) {
    const std::string name = entry.at("name");
    const Eigen::Index rows = entry.at("rows");
    const Eigen::Index cols = entry.at("cols");
    const std::size_t offset = entry.at("offset");
    bin.seekg(static_cast<std::streamoff>(offset));
    Eigen::MatrixXd tensor(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        double v = 0.0;
        bin.read(reinterpret_cast<char*>(&v), sizeof(double));
        tensor(r, c) = v;
      }
    }
    require(bin.good(), ErrorCode::kIo, "checkpoint: truncated tensors.bin");
    ckpt.tensors_[name] = std::move(tensor);
  }
  return ckpt;
}

}  // namespace dropbn
