#ifndef DROPBN_CHECKPOINT_HPP_
#define DROPBN_CHECKPOINT_HPP_

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "dropbn/nn.hpp"

namespace dropbn {

// Named-tensor archive: a directory holding `manifest.json` (names, shapes,
// dtypes, offsets) and `tensors.bin` (row-major float64, little endian).
// Round trips are bit-exact.
class Checkpoint {
 public:
  void add(const std::string& name, const Eigen::MatrixXd& tensor);
  void add_scalar(const std::string& name, double value);
  // value + adam state under <name>.{value,m,v,steps}
  void add_param(const std::string& name, const nn::Param& param);
  void add_mlp(const std::string& prefix, const nn::Mlp& net);

  bool has(const std::string& name) const;
  const Eigen::MatrixXd& tensor(const std::string& name) const;
  double scalar(const std::string& name) const;
  void read_param(const std::string& name, nn::Param& out) const;
  void read_mlp(const std::string& prefix, nn::Mlp& out) const;

  std::vector<std::string> names() const;

  void save(const std::string& dir) const;
  static Checkpoint load(const std::string& dir);

 private:
  std::map<std::string, Eigen::MatrixXd> tensors_;
};

}  // namespace dropbn

#endif  // DROPBN_CHECKPOINT_HPP_
