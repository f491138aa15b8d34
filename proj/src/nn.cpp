#include "dropbn/nn.hpp"

#include <cmath>

#include "dropbn/errors.hpp"

namespace dropbn::nn {

Mlp make_mlp(const std::vector<int>& widths, Rng& rng, Activation act) {
  require(widths.size() >= 2, ErrorCode::kInvalidArgument,
          "make_mlp: need at least input and output widths");
  Mlp net;
  net.act = act;
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    const int fan_in = widths[i];
    const int fan_out = widths[i + 1];
    const bool last = i + 2 == widths.size();
    // He init for hidden layers, Xavier for the linear output.
    const double std_dev = last ? std::sqrt(1.0 / fan_in)
                                : std::sqrt(2.0 / fan_in);
    Matrix w(fan_in, fan_out);
    for (int r = 0; r < fan_in; ++r)
      for (int c = 0; c < fan_out; ++c) w(r, c) = std_dev * rng.normal();
    Linear layer{Param(std::move(w)), Param(Matrix::Zero(1, fan_out))};
    net.layers.push_back(std::move(layer));
  }
  return net;
}

ad::Var mlp_forward(ad::Tape& tape, Mlp& net, ad::Var x) {
  ad::Var h = x;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    Linear& layer = net.layers[i];
    h = tape.add_rowvec(tape.matmul(h, tape.param(layer.weight)),
                        tape.param(layer.bias));
    if (i + 1 < net.layers.size()) {
      h = net.act == Activation::kRelu ? tape.relu(h) : tape.tanh_(h);
    }
  }
  return h;
}

Matrix mlp_forward_value(const Mlp& net, const Matrix& x) {
  Matrix h = x;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const Linear& layer = net.layers[i];
    h = (h * layer.weight.value).rowwise() + layer.bias.value.row(0);
    if (i + 1 < net.layers.size()) {
      if (net.act == Activation::kRelu) {
        h = h.cwiseMax(0.0);
      } else {
        h = h.unaryExpr([](double v) { return std::tanh(v); });
      }
    }
  }
  return h;
}

std::vector<Param*> params_of(Mlp& net) {
  std::vector<Param*> out;
  append_params(out, net);
  return out;
}

void append_params(std::vector<Param*>& out, Mlp& net) {
  for (Linear& layer : net.layers) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
}

void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

void Adam::step(const std::vector<Param*>& params) {
  for (Param* p : params) {
    p->steps += 1;
    const double t = static_cast<double>(p->steps);
    p->m = beta1_ * p->m + (1.0 - beta1_) * p->grad;
    p->v = beta2_ * p->v + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
    const double bc1 = 1.0 - std::pow(beta1_, t);
    const double bc2 = 1.0 - std::pow(beta2_, t);
    Matrix denom = (p->v / bc2).cwiseSqrt().array() + eps_;
    p->value -= (lr_ / bc1) * p->m.cwiseQuotient(denom);
  }
}

}  // namespace dropbn::nn
