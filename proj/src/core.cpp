#include "dropbn/core.hpp"

#include <algorithm>
#include <cmath>

namespace dropbn {

namespace {

constexpr double kMaskEps = 1e-15;

void check_dims_match(int a, int b, const char* what) {
  require(a == b, ErrorCode::kDimensionMismatch,
          std::string(what) + ": dimension mismatch");
}

}  // namespace

Vector EntropyEstimate::bin_edges(int i) const {
  Vector edges(bin_count + 1);
  const double width = (hi(i) - lo(i)) / bin_count;
  for (int b = 0; b <= bin_count; ++b) edges(b) = lo(i) + width * b;
  return edges;
}

Vector drop_probabilities(const DropParams& params) {
  return params.logits.unaryExpr(
      [](double v) { return ad::sigmoid_value(v); });
}

DropParams init_drop_params(int dim, double logit_lo, double logit_hi,
                            Rng& rng, double temperature) {
  require(dim >= 1, ErrorCode::kInvalidArgument,
          "init_drop_params: dimension must be positive");
  require(logit_lo <= logit_hi, ErrorCode::kInvalidArgument,
          "init_drop_params: interval is empty");
  require(temperature > 0.0, ErrorCode::kInvalidArgument,
          "init_drop_params: temperature must be positive");
  DropParams params;
  params.temperature = temperature;
  params.logits = Vector(dim);
  for (int i = 0; i < dim; ++i)
    params.logits(i) = rng.uniform(logit_lo, logit_hi);
  return params;
}

double scale_factor(const Vector& p) {
  const double d = static_cast<double>(p.size());
  const double remaining = d - p.sum();
  require(remaining >= 1e-6 * d, ErrorCode::kDegenerateDrop,
          "scale_factor: drop probabilities sum to (almost) all dimensions");
  return d / remaining;
}

MaskBatch sample_mask_hard(const DropParams& params, int n, Rng& rng) {
  require(n >= 1, ErrorCode::kInvalidArgument,
          "sample_mask_hard: need n >= 1");
  const Vector p = drop_probabilities(params);
  MaskBatch mask;
  mask.mode = MaskMode::kHard;
  mask.values = Matrix(n, params.dim());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < params.dim(); ++j)
      mask.values(i, j) = rng.uniform() < p(j) ? 0.0 : 1.0;
  return mask;
}

MaskBatch sample_mask_concrete(const DropParams& params, int n, Rng& rng) {
  require(n >= 1, ErrorCode::kInvalidArgument,
          "sample_mask_concrete: need n >= 1");
  require(params.temperature > 0.0, ErrorCode::kInvalidArgument,
          "sample_mask_concrete: temperature must be positive");
  MaskBatch mask;
  mask.mode = MaskMode::kRelaxed;
  mask.values = Matrix(n, params.dim());
  const double inv_t = 1.0 / params.temperature;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < params.dim(); ++j) {
      const double u = rng.uniform_open();
      const double keep_logit = -params.logits(j) + std::log(u) - std::log1p(-u);
      const double v = ad::sigmoid_value(inv_t * keep_logit);
      mask.values(i, j) = std::clamp(v, kMaskEps, 1.0 - kMaskEps);
    }
  }
  return mask;
}

CompressedBatch compress_stochastic(const Matrix& x, const DropParams& params,
                                    MaskMode mode, Rng& rng) {
  check_dims_match(static_cast<int>(x.cols()), params.dim(),
                   "compress_stochastic");
  const Vector p = drop_probabilities(params);
  const double b = scale_factor(p);
  CompressedBatch out;
  out.mask = mode == MaskMode::kHard
                 ? sample_mask_hard(params, static_cast<int>(x.rows()), rng)
                 : sample_mask_concrete(params, static_cast<int>(x.rows()),
                                        rng);
  out.scale = b;
  out.values = b * out.mask.values.cwiseProduct(x);
  return out;
}

Matrix deterministic_keep_mask(const Vector& p) {
  Matrix keep(1, p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i)
    keep(0, i) = p(i) < 0.5 ? 1.0 : 0.0;
  return keep;
}

int deterministic_kept_count(const Vector& p) {
  int kept = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) < 0.5) ++kept;
  return kept;
}

CompressedBatch compress_deterministic(const Matrix& x,
                                       const DropParams& params) {
  check_dims_match(static_cast<int>(x.cols()), params.dim(),
                   "compress_deterministic");
  const Vector p = drop_probabilities(params);
  const int kept = deterministic_kept_count(p);
  require(kept > 0, ErrorCode::kEmptyRepresentation,
          "compress_deterministic: every dimension has p >= 0.5");
  const double b = static_cast<double>(params.dim()) / kept;
  CompressedBatch out;
  out.mask.mode = MaskMode::kHard;
  out.mask.values = deterministic_keep_mask(p).replicate(x.rows(), 1);
  out.scale = b;
  out.values = b * out.mask.values.cwiseProduct(x);
  return out;
}

EntropyEstimate estimate_entropy_binning(const Matrix& x, int bin_count) {
  require(x.rows() >= 2, ErrorCode::kInsufficientSamples,
          "estimate_entropy_binning: need at least 2 samples");
  require(bin_count >= 2, ErrorCode::kInvalidArgument,
          "estimate_entropy_binning: need at least 2 bins");
  const int d = static_cast<int>(x.cols());
  const int n = static_cast<int>(x.rows());
  EntropyEstimate est;
  est.bin_count = bin_count;
  est.entropies = Vector::Zero(d);
  est.lo = Vector(d);
  est.hi = Vector(d);
  std::vector<double> counts(bin_count);
  for (int j = 0; j < d; ++j) {
    const double lo = x.col(j).minCoeff();
    const double hi = x.col(j).maxCoeff();
    est.lo(j) = lo;
    est.hi(j) = hi;
    if (hi - lo < 1e-12) continue;  // near-constant column, H = 0
    std::fill(counts.begin(), counts.end(), 0.0);
    const double scale = bin_count / (hi - lo);
    for (int i = 0; i < n; ++i) {
      int b = static_cast<int>((x(i, j) - lo) * scale);
      b = std::clamp(b, 0, bin_count - 1);
      counts[b] += 1.0;
    }
    double h = 0.0;
    for (int b = 0; b < bin_count; ++b) {
      if (counts[b] == 0.0) continue;
      const double q = counts[b] / n;
      h -= q * std::log(q);
    }
    est.entropies(j) = h;
  }
  return est;
}

double compression_term(const Vector& entropies, const Vector& p) {
  check_dims_match(static_cast<int>(entropies.size()),
                   static_cast<int>(p.size()), "compression_term");
  return entropies.dot(Vector::Ones(p.size()) - p);
}

double compression_term(const EntropyEstimate& h, const DropParams& params) {
  return compression_term(h.entropies, drop_probabilities(params));
}

ad::Var relaxed_keep_mask_var(ad::Tape& tape, ad::Var logits, const Matrix& u,
                              double temperature) {
  require(temperature > 0.0, ErrorCode::kInvalidArgument,
          "relaxed_keep_mask: temperature must be positive");
  const int n = static_cast<int>(u.rows());
  Matrix noise_logit =
      (u.array().log() - (1.0 - u.array()).log()).matrix();
  ad::Var keep_logit = tape.sub(tape.constant(std::move(noise_logit)),
                                tape.broadcast_rows(logits, n));
  return tape.sigmoid(tape.mul_scalar(keep_logit, 1.0 / temperature));
}

ad::Var db_scale_var(ad::Tape& tape, ad::Var logits, bool detach_scale) {
  const double d = static_cast<double>(tape.value(logits).cols());
  if (detach_scale) {
    Vector p = tape.value(logits).row(0).transpose().unaryExpr(
        [](double v) { return ad::sigmoid_value(v); });
    Matrix b(1, 1);
    b(0, 0) = scale_factor(p);
    return tape.constant(std::move(b));
  }
  ad::Var sum_p = tape.sum_all(tape.sigmoid(logits));
  require(d - tape.value(sum_p)(0, 0) >= 1e-6 * d, ErrorCode::kDegenerateDrop,
          "db_scale: drop probabilities sum to (almost) all dimensions");
  return tape.mul_scalar(tape.inv(tape.rsub_scalar(d, sum_p)), d);
}

ad::Var compress_relaxed_var(ad::Tape& tape, ad::Var x, ad::Var logits,
                             const Matrix& u, double temperature,
                             bool detach_scale) {
  require(tape.value(x).rows() == u.rows() && tape.value(x).cols() == u.cols(),
          ErrorCode::kDimensionMismatch,
          "compress_relaxed: noise shape must match activations");
  ad::Var mask = relaxed_keep_mask_var(tape, logits, u, temperature);
  ad::Var b = db_scale_var(tape, logits, detach_scale);
  return tape.scale_by(tape.mul(mask, x), b);
}

ad::Var compression_term_var(ad::Tape& tape, ad::Var logits,
                             const Vector& entropies) {
  check_dims_match(static_cast<int>(tape.value(logits).cols()),
                   static_cast<int>(entropies.size()), "compression_term");
  ad::Var keep = tape.rsub_scalar(1.0, tape.sigmoid(logits));
  return tape.sum_all(tape.mul(keep, tape.constant(entropies.transpose())));
}

Matrix draw_uniform(int rows, int cols, Rng& rng) {
  Matrix u(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) u(i, j) = rng.uniform_open();
  return u;
}

}  // namespace dropbn
