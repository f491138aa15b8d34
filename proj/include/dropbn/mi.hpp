#ifndef DROPBN_MI_HPP_
#define DROPBN_MI_HPP_

#include <Eigen/Dense>
#include <vector>

#include "dropbn/nn.hpp"
#include "dropbn/rng.hpp"
#include "dropbn/tape.hpp"

namespace dropbn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Deep-Infomax discriminator: scores a concatenated (z, y) pair with a
// fully connected net, hidden layers 64/32/16, scalar output.
struct Discriminator {
  nn::Mlp net;
  int z_dim = 0;
  int y_dim = 0;
};

Discriminator make_discriminator(int z_dim, int y_dim, Rng& rng,
                                 const std::vector<int>& hidden = {64, 32,
                                                                   16});

double discriminator_score(const Discriminator& disc, const Vector& z,
                           const Vector& y);

// Batched forward: row i scores (z.row(i), y.row(i)). Returns n x 1.
Matrix discriminator_scores(const Discriminator& disc, const Matrix& z,
                            const Matrix& y);

ad::Var discriminator_scores_var(ad::Tape& tape, Discriminator& disc,
                                 ad::Var z, ad::Var y);

// Jensen-Shannon mutual information estimate from discriminator scores:
// 0.5 * ( mean(-softplus(-s_joint)) - mean(softplus(s_marginal)) + log 4 ).
double jsd_mi_estimate(const Vector& joint_scores,
                       const Vector& marginal_scores);

ad::Var jsd_mi_estimate_var(ad::Tape& tape, ad::Var joint_scores,
                            ad::Var marginal_scores);

enum class Pairing { kJoint, kMarginal };

struct PairBatch {
  Matrix z;
  Matrix y;
  Pairing pairing = Pairing::kJoint;
};

// Uniform random permutation of [0, n).
std::vector<int> random_permutation(int n, Rng& rng);

// Product-of-marginals sampler: permutes y rows uniformly, keeps z rows.
PairBatch make_marginal_pairs(const PairBatch& joint, Rng& rng);

// Per-dimension I(X_i; label) for a continuous feature against a discrete
// label, nearest-neighbor estimator, clamped at 0. Labels are class indices.
Vector knn_mi_scores(const Matrix& x, const std::vector<int>& labels,
                     int k = 3);

// Indices of the m largest scores; ties broken toward the lowest index.
std::vector<int> select_top_features(const Vector& scores, int m);

double digamma(double x);

}  // namespace dropbn

#endif  // DROPBN_MI_HPP_
