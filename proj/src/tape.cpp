#include "dropbn/tape.hpp"

#include <cmath>
#include <mutex>
#include <utility>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "dropbn/nn.hpp"

namespace dropbn::ad {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          ErrorCode::kDimensionMismatch, std::string(op) + ": shape mismatch");
}

// Tape passes allocate and free many >128 kB node buffers; with glibc's
// default mmap threshold every pass pays mmap/munmap plus page faults.
// Keeping large blocks on the heap makes graph construction ~6x faster.
void tune_allocator_once() {
#if defined(__GLIBC__)
  static std::once_flag flag;
  std::call_once(flag, []() {
    mallopt(M_MMAP_THRESHOLD, 64 << 20);
    mallopt(M_TRIM_THRESHOLD, 64 << 20);
  });
#endif
}

}  // namespace

Var Tape::push(Matrix value, bool needs_grad, std::function<void()> back) {
  if (nodes_.empty()) tune_allocator_once();
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  if (needs_grad) {
    node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
    node.back = std::move(back);
  }
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix v) { return push(std::move(v), false, {}); }

Var Tape::param(nn::Param& p) {
  Var v = push(p.value, true, {});
  leaves_.emplace_back(v.idx, &p);
  return v;
}

Var Tape::add(Var a, Var b) {
  check_same_shape(value(a), value(b), "add");
  Matrix out = value(a) + value(b);
  bool ng = needs(a) || needs(b);
  Var r{size()};
  return push(std::move(out), ng, [this, a, b, r]() {
    const Matrix& g = grad(r);
    if (needs(a)) grad_ref(a) += g;
    if (needs(b)) grad_ref(b) += g;
  });
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(value(a), value(b), "sub");
  Matrix out = value(a) - value(b);
  bool ng = needs(a) || needs(b);
  Var r{size()};
  return push(std::move(out), ng, [this, a, b, r]() {
    const Matrix& g = grad(r);
    if (needs(a)) grad_ref(a) += g;
    if (needs(b)) grad_ref(b) -= g;
  });
}

Var Tape::mul(Var a, Var b) {
  check_same_shape(value(a), value(b), "mul");
  Matrix out = value(a).cwiseProduct(value(b));
  bool ng = needs(a) || needs(b);
  Var r{size()};
  return push(std::move(out), ng, [this, a, b, r]() {
    const Matrix& g = grad(r);
    if (needs(a)) grad_ref(a) += g.cwiseProduct(value(b));
    if (needs(b)) grad_ref(b) += g.cwiseProduct(value(a));
  });
}

Var Tape::min2(Var a, Var b) {
  check_same_shape(value(a), value(b), "min2");
  Matrix out = value(a).cwiseMin(value(b));
  bool ng = needs(a) || needs(b);
  Var r{size()};
  return push(std::move(out), ng, [this, a, b, r]() {
    const Matrix& g = grad(r);
    const Matrix& va = value(a);
    const Matrix& vb = value(b);
    Matrix take_a = (va.array() <= vb.array()).cast<double>().matrix();
    if (needs(a)) grad_ref(a) += g.cwiseProduct(take_a);
    if (needs(b)) {
      Matrix take_b = Matrix::Ones(va.rows(), va.cols()) - take_a;
      grad_ref(b) += g.cwiseProduct(take_b);
    }
  });
}

Var Tape::matmul(Var a, Var b) {
  require(value(a).cols() == value(b).rows(), ErrorCode::kDimensionMismatch,
          "matmul: inner dimensions differ");
  Matrix out = value(a) * value(b);
  bool ng = needs(a) || needs(b);
  Var r{size()};
  return push(std::move(out), ng, [this, a, b, r]() {
    const Matrix& g = grad(r);
    if (needs(a)) grad_ref(a) += g * value(b).transpose();
    if (needs(b)) grad_ref(b) += value(a).transpose() * g;
  });
}

Var Tape::add_rowvec(Var x, Var v) {
  require(value(v).rows() == 1 && value(v).cols() == value(x).cols(),
          ErrorCode::kDimensionMismatch, "add_rowvec: bias shape");
  Matrix out = value(x).rowwise() + value(v).row(0);
  bool ng = needs(x) || needs(v);
  Var r{size()};
  return push(std::move(out), ng, [this, x, v, r]() {
    const Matrix& g = grad(r);
    if (needs(x)) grad_ref(x) += g;
    if (needs(v)) grad_ref(v) += g.colwise().sum();
  });
}

Var Tape::broadcast_rows(Var v, int n) {
  require(value(v).rows() == 1, ErrorCode::kDimensionMismatch,
          "broadcast_rows: expects a row vector");
  Matrix out = value(v).replicate(n, 1);
  bool ng = needs(v);
  Var r{size()};
  return push(std::move(out), ng, [this, v, r]() {
    grad_ref(v) += grad(r).colwise().sum();
  });
}

Var Tape::scale_by(Var x, Var s) {
  require(value(s).rows() == 1 && value(s).cols() == 1,
          ErrorCode::kDimensionMismatch, "scale_by: scale must be 1x1");
  const double sv = value(s)(0, 0);
  Matrix out = sv * value(x);
  bool ng = needs(x) || needs(s);
  Var r{size()};
  return push(std::move(out), ng, [this, x, s, sv, r]() {
    const Matrix& g = grad(r);
    if (needs(x)) grad_ref(x) += sv * g;
    if (needs(s)) grad_ref(s)(0, 0) += g.cwiseProduct(value(x)).sum();
  });
}

Var Tape::neg(Var x) { return mul_scalar(x, -1.0); }

Var Tape::sigmoid(Var x) {
  // vectorized 1 / (1 + exp(-x)); exp overflow saturates cleanly to 0
  Matrix out = ((-value(x).array()).exp() + 1.0).inverse().matrix();
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() {
    const Matrix& y = value(r);
    grad_ref(x).array() += grad(r).array() * y.array() * (1.0 - y.array());
  });
}

Var Tape::relu(Var x) {
  Matrix out = value(x).cwiseMax(0.0);
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() {
    Matrix mask = (value(x).array() > 0.0).cast<double>().matrix();
    grad_ref(x) += grad(r).cwiseProduct(mask);
  });
}

Var Tape::tanh_(Var x) {
  Matrix out = value(x).unaryExpr([](double v) { return std::tanh(v); });
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() {
    const Matrix& y = value(r);
    Matrix one_minus = Matrix::Ones(y.rows(), y.cols()) - y.cwiseProduct(y);
    grad_ref(x) += grad(r).cwiseProduct(one_minus);
  });
}

Var Tape::exp_(Var x) {
  Matrix out = value(x).array().exp().matrix();
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() {
    grad_ref(x) += grad(r).cwiseProduct(value(r));
  });
}

Var Tape::log_(Var x) {
  Matrix out = value(x).array().log().matrix();
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() {
    grad_ref(x) += grad(r).cwiseQuotient(value(x));
  });
}

Var Tape::softplus(Var x) {
  Matrix out = value(x).unaryExpr([](double v) { return softplus_value(v); });
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() {
    Matrix s = value(x).unaryExpr([](double v) { return sigmoid_value(v); });
    grad_ref(x) += grad(r).cwiseProduct(s);
  });
}

Var Tape::square(Var x) {
  Matrix out = value(x).cwiseProduct(value(x));
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() {
    grad_ref(x) += 2.0 * grad(r).cwiseProduct(value(x));
  });
}

Var Tape::inv(Var x) {
  Matrix out = value(x).cwiseInverse();
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() {
    const Matrix& y = value(r);
    grad_ref(x) -= grad(r).cwiseProduct(y.cwiseProduct(y));
  });
}

Var Tape::clamp(Var x, double lo, double hi) {
  Matrix out = value(x).cwiseMax(lo).cwiseMin(hi);
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, lo, hi, r]() {
    Matrix pass = ((value(x).array() > lo) && (value(x).array() < hi))
                      .cast<double>()
                      .matrix();
    grad_ref(x) += grad(r).cwiseProduct(pass);
  });
}

Var Tape::add_scalar(Var x, double c) {
  Matrix out = value(x).array() + c;
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() { grad_ref(x) += grad(r); });
}

Var Tape::mul_scalar(Var x, double c) {
  Matrix out = c * value(x);
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng,
              [this, x, c, r]() { grad_ref(x) += c * grad(r); });
}

Var Tape::rsub_scalar(double c, Var x) {
  Matrix out = (c - value(x).array()).matrix();
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() { grad_ref(x) -= grad(r); });
}

Var Tape::sum_all(Var x) {
  Matrix out(1, 1);
  out(0, 0) = value(x).sum();
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() {
    grad_ref(x).array() += grad(r)(0, 0);
  });
}

Var Tape::mean_all(Var x) {
  const double n = static_cast<double>(value(x).size());
  Matrix out(1, 1);
  out(0, 0) = value(x).sum() / n;
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, n, r]() {
    grad_ref(x).array() += grad(r)(0, 0) / n;
  });
}

Var Tape::sum_rows(Var x) {
  Matrix out = value(x).rowwise().sum();
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() {
    grad_ref(x) += grad(r).replicate(1, value(x).cols());
  });
}

Var Tape::concat_cols(Var a, Var b) {
  require(value(a).rows() == value(b).rows(), ErrorCode::kDimensionMismatch,
          "concat_cols: row counts differ");
  const auto ca = value(a).cols();
  const auto cb = value(b).cols();
  Matrix out(value(a).rows(), ca + cb);
  out.leftCols(ca) = value(a);
  out.rightCols(cb) = value(b);
  bool ng = needs(a) || needs(b);
  Var r{size()};
  return push(std::move(out), ng, [this, a, b, ca, cb, r]() {
    const Matrix& g = grad(r);
    if (needs(a)) grad_ref(a) += g.leftCols(ca);
    if (needs(b)) grad_ref(b) += g.rightCols(cb);
  });
}

Var Tape::slice_cols(Var x, int start, int len) {
  require(start >= 0 && len >= 1 && start + len <= value(x).cols(),
          ErrorCode::kDimensionMismatch, "slice_cols: range out of bounds");
  Matrix out = value(x).middleCols(start, len);
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, start, len, r]() {
    grad_ref(x).middleCols(start, len) += grad(r);
  });
}

Var Tape::repeat_rows(Var x, int times) {
  require(times >= 1, ErrorCode::kInvalidArgument,
          "repeat_rows: times must be >= 1");
  const Matrix& v = value(x);
  Matrix out(v.rows() * times, v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    out.middleRows(i * times, times) = v.row(i).replicate(times, 1);
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, times, r]() {
    const Matrix& g = grad(r);
    Matrix& gx = grad_ref(x);
    for (Eigen::Index i = 0; i < gx.rows(); ++i)
      gx.row(i) += g.middleRows(i * times, times).colwise().sum();
  });
}

Var Tape::permute_rows(Var x, const std::vector<int>& perm) {
  require(static_cast<Eigen::Index>(perm.size()) == value(x).rows(),
          ErrorCode::kDimensionMismatch, "permute_rows: size mismatch");
  const Matrix& v = value(x);
  Matrix out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) out.row(i) = v.row(perm[i]);
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, perm, r]() {
    const Matrix& g = grad(r);
    Matrix& gx = grad_ref(x);
    for (Eigen::Index i = 0; i < g.rows(); ++i) gx.row(perm[i]) += g.row(i);
  });
}

Var Tape::log_softmax_rows(Var x) {
  const Matrix& v = value(x);
  Matrix out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double mx = v.row(i).maxCoeff();
    const double lse = std::log((v.row(i).array() - mx).exp().sum()) + mx;
    out.row(i) = v.row(i).array() - lse;
  }
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, r]() {
    const Matrix& g = grad(r);
    const Matrix& y = value(r);
    Matrix soft = y.array().exp().matrix();
    Eigen::VectorXd row_sums = g.rowwise().sum();
    grad_ref(x) += g - soft.cwiseProduct(row_sums.replicate(1, y.cols()));
  });
}

Var Tape::pick_per_row(Var x, const std::vector<int>& idx) {
  require(static_cast<Eigen::Index>(idx.size()) == value(x).rows(),
          ErrorCode::kDimensionMismatch, "pick_per_row: index count");
  Matrix out(value(x).rows(), 1);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    require(idx[i] >= 0 && idx[i] < value(x).cols(),
            ErrorCode::kInvalidArgument, "pick_per_row: index out of range");
    out(i, 0) = value(x)(i, idx[i]);
  }
  bool ng = needs(x);
  Var r{size()};
  return push(std::move(out), ng, [this, x, idx, r]() {
    const Matrix& g = grad(r);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      grad_ref(x)(i, idx[i]) += g(i, 0);
    }
  });
}

void Tape::backward(Var loss) {
  require(loss.valid() && value(loss).rows() == 1 && value(loss).cols() == 1,
          ErrorCode::kInvalidArgument, "backward: loss must be a 1x1 node");
  require(needs(loss), ErrorCode::kInvalidArgument,
          "backward: loss does not depend on any parameter");
  grad_ref(loss)(0, 0) = 1.0;
  for (int i = loss.idx; i >= 0; --i) {
    if (nodes_[i].needs_grad && nodes_[i].back) nodes_[i].back();
  }
  for (const auto& [idx, p] : leaves_) {
    if (idx <= loss.idx) p->grad += nodes_[idx].grad;
  }
}

}  // namespace dropbn::ad
