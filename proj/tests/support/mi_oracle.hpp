#ifndef DROPBN_TESTS_MI_ORACLE_HPP_
#define DROPBN_TESTS_MI_ORACLE_HPP_

#include <Eigen/Dense>
#include <vector>

#include "dropbn/rng.hpp"

// Exact enumeration oracle for the compression bound. Deliberately
// independent of the library's compression code path: it works on a small
// discrete joint distribution and enumerates every (value, mask) pair.
namespace dropbn::oracle {

struct DiscretePmf {
  std::vector<std::vector<double>> values;  // support per dimension
  std::vector<double> joint;                // row-major over the supports

  int dims() const { return static_cast<int>(values.size()); }
  int support(int i) const { return static_cast<int>(values[i].size()); }
  long joint_states() const;
  void validate() const;  // probabilities >= 0, sum to 1 within 1e-12
};

// Random pmf with distinct nonzero support values. `independent` makes the
// joint a product of per-dimension marginals.
DiscretePmf random_pmf(int dims, int max_support, bool independent, Rng& rng);

// Exact I(Z; X) in nats where Z = b * mask .* X, mask_i ~ Bernoulli(1-p_i)
// independent, b = d / (d - sum p). Throws when the enumeration exceeds
// 10^6 states.
double brute_force_mi(const DiscretePmf& pmf, const Eigen::VectorXd& p);

// Exact total correlation TC(Z) = sum_i H(Z_i) - H(Z).
double total_correlation(const DiscretePmf& pmf, const Eigen::VectorXd& p);

// Exact marginal entropies H(X_i) in nats.
Eigen::VectorXd marginal_entropies(const DiscretePmf& pmf);

}  // namespace dropbn::oracle

#endif  // DROPBN_TESTS_MI_ORACLE_HPP_
