#ifndef DROPBN_NN_HPP_
#define DROPBN_NN_HPP_

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dropbn/rng.hpp"
#include "dropbn/tape.hpp"

namespace dropbn::nn {

using Matrix = Eigen::MatrixXd;

// A trainable value plus its gradient and Adam state. Step count is kept
// per parameter so groups updated at different cadences stay bias-corrected.
struct Param {
  Matrix value;
  Matrix grad;
  Matrix m;
  Matrix v;
  long steps = 0;

  explicit Param(Matrix init = Matrix())
      : value(std::move(init)),
        grad(Matrix::Zero(value.rows(), value.cols())),
        m(Matrix::Zero(value.rows(), value.cols())),
        v(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

struct Linear {
  Param weight;  // in x out
  Param bias;    // 1 x out
};

enum class Activation { kRelu, kTanh };

// Fully connected net: hidden layers use `act`, output layer is linear.
struct Mlp {
  std::vector<Linear> layers;
  Activation act = Activation::kRelu;

  int in_dim() const { return static_cast<int>(layers.front().weight.value.rows()); }
  int out_dim() const { return static_cast<int>(layers.back().weight.value.cols()); }
};

Mlp make_mlp(const std::vector<int>& widths, Rng& rng,
             Activation act = Activation::kRelu);

ad::Var mlp_forward(ad::Tape& tape, Mlp& net, ad::Var x);

// Inference path without a tape.
Matrix mlp_forward_value(const Mlp& net, const Matrix& x);

std::vector<Param*> params_of(Mlp& net);
void append_params(std::vector<Param*>& out, Mlp& net);
void zero_grads(const std::vector<Param*>& params);

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Param*>& params);
  double lr() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
};

}  // namespace dropbn::nn

#endif  // DROPBN_NN_HPP_
