#ifndef DROPBN_TAPE_HPP_
#define DROPBN_TAPE_HPP_

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "dropbn/errors.hpp"

namespace dropbn::nn {
struct Param;
}

namespace dropbn::ad {

using Matrix = Eigen::MatrixXd;

struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

// Reverse-mode tape over dense double matrices. A tape lives for one
// forward/backward pass; parameters persist outside it (nn::Param) and
// receive accumulated gradients on backward().
//
// Every op allocates a node holding the value and, when any input needs a
// gradient, a backward closure. Scalars are 1x1 matrices.
class Tape {
 public:
  Var constant(Matrix v);
  Var param(nn::Param& p);

  // elementwise, equal shapes
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var min2(Var a, Var b);  // gradient follows the smaller input (ties: a)

  Var matmul(Var a, Var b);

  // broadcasting
  Var add_rowvec(Var x, Var v);       // x: n x m, v: 1 x m
  Var broadcast_rows(Var v, int n);   // 1 x m -> n x m
  Var scale_by(Var x, Var s);         // s: 1 x 1

  // unary
  Var neg(Var x);
  Var sigmoid(Var x);
  Var relu(Var x);
  Var tanh_(Var x);
  Var exp_(Var x);
  Var log_(Var x);
  Var softplus(Var x);
  Var square(Var x);
  Var inv(Var x);  // 1/x elementwise
  Var clamp(Var x, double lo, double hi);

  // affine with constants
  Var add_scalar(Var x, double c);
  Var mul_scalar(Var x, double c);
  Var rsub_scalar(double c, Var x);  // c - x

  // reductions
  Var sum_all(Var x);   // 1 x 1
  Var mean_all(Var x);  // 1 x 1
  Var sum_rows(Var x);  // n x m -> n x 1

  // structure
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var x, int start, int len);
  Var repeat_rows(Var x, int times);       // row i copied `times` times, in place
  Var permute_rows(Var x, const std::vector<int>& perm);  // out.row(i) = x.row(perm[i])

  // classification helpers
  Var log_softmax_rows(Var x);
  Var pick_per_row(Var x, const std::vector<int>& idx);  // n x 1

  // Runs the reverse sweep from `loss` (must be 1 x 1) and adds gradients
  // into every nn::Param registered via param().
  void backward(Var loss);

  const Matrix& value(Var v) const { return nodes_[v.idx].value; }
  const Matrix& grad(Var v) const { return nodes_[v.idx].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void()> back;  // empty for leaves/constants
    bool needs_grad = false;
  };

  Var push(Matrix value, bool needs_grad, std::function<void()> back);
  bool needs(Var v) const { return nodes_[v.idx].needs_grad; }
  Matrix& grad_ref(Var v) { return nodes_[v.idx].grad; }

  std::vector<Node> nodes_;
  std::vector<std::pair<int, nn::Param*>> leaves_;
};

// Stable softplus used by tape and plain numeric code alike.
inline double softplus_value(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid_value(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace dropbn::ad

#endif  // DROPBN_TAPE_HPP_
