#include "dropbn/mi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "dropbn/errors.hpp"

namespace dropbn {

Discriminator make_discriminator(int z_dim, int y_dim, Rng& rng,
                                 const std::vector<int>& hidden) {
  require(z_dim >= 1 && y_dim >= 1, ErrorCode::kInvalidArgument,
          "make_discriminator: dimensions must be positive");
  std::vector<int> widths;
  widths.push_back(z_dim + y_dim);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  Discriminator disc;
  disc.net = nn::make_mlp(widths, rng);
  disc.z_dim = z_dim;
  disc.y_dim = y_dim;
  return disc;
}

double discriminator_score(const Discriminator& disc, const Vector& z,
                           const Vector& y) {
  require(z.size() == disc.z_dim && y.size() == disc.y_dim,
          ErrorCode::kDimensionMismatch, "discriminator_score: input widths");
  Matrix in(1, disc.z_dim + disc.y_dim);
  in.leftCols(disc.z_dim) = z.transpose();
  in.rightCols(disc.y_dim) = y.transpose();
  return nn::mlp_forward_value(disc.net, in)(0, 0);
}

Matrix discriminator_scores(const Discriminator& disc, const Matrix& z,
                            const Matrix& y) {
  require(z.rows() == y.rows(), ErrorCode::kDimensionMismatch,
          "discriminator_scores: row counts differ");
  require(z.cols() == disc.z_dim && y.cols() == disc.y_dim,
          ErrorCode::kDimensionMismatch, "discriminator_scores: input widths");
  Matrix in(z.rows(), disc.z_dim + disc.y_dim);
  in.leftCols(disc.z_dim) = z;
  in.rightCols(disc.y_dim) = y;
  return nn::mlp_forward_value(disc.net, in);
}

ad::Var discriminator_scores_var(ad::Tape& tape, Discriminator& disc,
                                 ad::Var z, ad::Var y) {
  return nn::mlp_forward(tape, disc.net, tape.concat_cols(z, y));
}

double jsd_mi_estimate(const Vector& joint_scores,
                       const Vector& marginal_scores) {
  require(joint_scores.size() > 0 && marginal_scores.size() > 0,
          ErrorCode::kInvalidArgument, "jsd_mi_estimate: empty score vector");
  double joint_term = 0.0;
  for (Eigen::Index i = 0; i < joint_scores.size(); ++i)
    joint_term -= ad::softplus_value(-joint_scores(i));
  joint_term /= static_cast<double>(joint_scores.size());
  double marginal_term = 0.0;
  for (Eigen::Index i = 0; i < marginal_scores.size(); ++i)
    marginal_term += ad::softplus_value(marginal_scores(i));
  marginal_term /= static_cast<double>(marginal_scores.size());
  return 0.5 * (joint_term - marginal_term + 2.0 * std::numbers::ln2);
}

ad::Var jsd_mi_estimate_var(ad::Tape& tape, ad::Var joint_scores,
                            ad::Var marginal_scores) {
  ad::Var joint_term = tape.neg(tape.mean_all(
      tape.softplus(tape.neg(joint_scores))));
  ad::Var marginal_term = tape.mean_all(tape.softplus(marginal_scores));
  return tape.mul_scalar(
      tape.add_scalar(tape.sub(joint_term, marginal_term),
                      2.0 * std::numbers::ln2),
      0.5);
}

std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = rng.uniform_int(i + 1);
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

PairBatch make_marginal_pairs(const PairBatch& joint, Rng& rng) {
  require(joint.pairing == Pairing::kJoint, ErrorCode::kInvalidArgument,
          "make_marginal_pairs: input must be jointly paired");
  const int n = static_cast<int>(joint.z.rows());
  require(n >= 2, ErrorCode::kInvalidArgument,
          "make_marginal_pairs: need at least 2 rows to shuffle");
  const std::vector<int> perm = random_permutation(n, rng);
  PairBatch out;
  out.pairing = Pairing::kMarginal;
  out.z = joint.z;
  out.y = Matrix(n, joint.y.cols());
  for (int i = 0; i < n; ++i) out.y.row(i) = joint.y.row(perm[i]);
  return out;
}

double digamma(double x) {
  // Recurrence into the asymptotic regime, then the standard expansion.
  double result = 0.0;
  while (x < 8.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 - inv2 / 240.0)));
  return result;
}

namespace {

// Nearest-neighbor MI between one continuous feature column and the labels.
double knn_mi_single(const std::vector<double>& values,
                     const std::vector<int>& labels, int n_classes, int k) {
  const int n = static_cast<int>(values.size());

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values[a] < values[b]; });
  std::vector<double> sorted_all(n);
  for (int i = 0; i < n; ++i) sorted_all[i] = values[order[i]];

  std::vector<std::vector<double>> by_class(n_classes);
  for (int i = 0; i < n; ++i) by_class[labels[order[i]]].push_back(sorted_all[i]);
  std::vector<int> class_count(n_classes, 0);
  for (int c : labels) class_count[c] += 1;

  std::vector<int> pos_in_class(n_classes, 0);
  double psi_label = 0.0;
  double psi_m = 0.0;
  int used = 0;
  for (int s = 0; s < n; ++s) {
    const int i = order[s];
    const int c = labels[i];
    const auto& cls = by_class[c];
    const int nc = static_cast<int>(cls.size());
    const int pos = pos_in_class[c]++;
    if (nc <= k) continue;  // cannot form k neighbors within the class

    // distance to the k-th nearest same-class neighbor of values[i]
    int left = pos - 1;
    int right = pos + 1;
    double radius = 0.0;
    for (int t = 0; t < k; ++t) {
      const double dl =
          left >= 0 ? sorted_all[s] - cls[left]
                    : std::numeric_limits<double>::infinity();
      const double dr =
          right < nc ? cls[right] - sorted_all[s]
                     : std::numeric_limits<double>::infinity();
      if (dl <= dr) {
        radius = dl;
        --left;
      } else {
        radius = dr;
        ++right;
      }
    }
    if (!(radius > 0.0)) continue;  // duplicated values, no usable radius

    // count of samples (any label, self included) strictly inside the radius
    const auto lo = std::upper_bound(sorted_all.begin(), sorted_all.end(),
                                     sorted_all[s] - radius);
    const auto hi = std::lower_bound(sorted_all.begin(), sorted_all.end(),
                                     sorted_all[s] + radius);
    const int m = static_cast<int>(hi - lo);
    psi_label += digamma(static_cast<double>(class_count[c]));
    psi_m += digamma(static_cast<double>(std::max(m, 1)));
    ++used;
  }
  if (used == 0) return 0.0;
  const double mi = digamma(static_cast<double>(n)) + digamma(double(k)) -
                    psi_label / used - psi_m / used;
  return std::max(mi, 0.0);
}

}  // namespace

Vector knn_mi_scores(const Matrix& x, const std::vector<int>& labels, int k) {
  const int n = static_cast<int>(x.rows());
  require(static_cast<int>(labels.size()) == n, ErrorCode::kDimensionMismatch,
          "knn_mi_scores: labels must match sample count");
  require(k >= 1 && n > k, ErrorCode::kInvalidArgument,
          "knn_mi_scores: need n > k >= 1");
  int n_classes = 0;
  for (int c : labels) {
    require(c >= 0, ErrorCode::kInvalidArgument,
            "knn_mi_scores: labels must be nonnegative class indices");
    n_classes = std::max(n_classes, c + 1);
  }
  Vector scores(x.cols());
  std::vector<double> column(n);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double lo = x.col(j).minCoeff();
    const double hi = x.col(j).maxCoeff();
    if (hi - lo < 1e-12) {
      scores(j) = 0.0;  // constant feature carries no information
      continue;
    }
    for (int i = 0; i < n; ++i) column[i] = x(i, j);
    scores(j) = knn_mi_single(column, labels, n_classes, k);
  }
  return scores;
}

std::vector<int> select_top_features(const Vector& scores, int m) {
  const int d = static_cast<int>(scores.size());
  require(m >= 1 && m <= d, ErrorCode::kInvalidArgument,
          "select_top_features: m out of range");
  std::vector<int> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace dropbn
