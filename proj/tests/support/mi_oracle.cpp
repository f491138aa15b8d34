#include "support/mi_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <string>

#include "dropbn/errors.hpp"

namespace dropbn::oracle {

namespace {

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

// Exact-value key for a z outcome: the raw bytes of its doubles. Dropped
// coordinates are exactly 0.0, kept ones exactly b * value, so byte
// equality is the right notion of "same outcome".
std::string key_of(const std::vector<double>& z) {
  std::string key(z.size() * sizeof(double), '\0');
  std::memcpy(key.data(), z.data(), key.size());
  return key;
}

struct Enumeration {
  // per x-index: distribution over z outcomes
  std::vector<std::map<std::string, double>> z_given_x;
  std::map<std::string, double> z_marginal;
  std::vector<double> x_prob;
  std::vector<std::map<double, double>> zi_marginal;  // per-dim Z_i dist
};

Enumeration enumerate(const DiscretePmf& pmf, const Eigen::VectorXd& p) {
  pmf.validate();
  const int d = pmf.dims();
  require(d == static_cast<int>(p.size()), ErrorCode::kDimensionMismatch,
          "oracle: p length mismatch");
  const long states = pmf.joint_states() << d;
  require(states <= 1000000L, ErrorCode::kOracleTooLarge,
          "oracle: too many (value, mask) states");

  const double dd = static_cast<double>(d);
  const double b = dd / (dd - p.sum());

  Enumeration out;
  out.zi_marginal.resize(d);
  const long nx = pmf.joint_states();
  out.z_given_x.resize(nx);
  out.x_prob.resize(nx);

  std::vector<int> idx(d, 0);
  for (long xi = 0; xi < nx; ++xi) {
    // unpack xi into per-dimension indices (row-major)
    long rem = xi;
    for (int i = d - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(rem % pmf.support(i));
      rem /= pmf.support(i);
    }
    const double px = pmf.joint[xi];
    out.x_prob[xi] = px;

    for (int mask = 0; mask < (1 << d); ++mask) {
      double pm = 1.0;
      std::vector<double> z(d);
      for (int i = 0; i < d; ++i) {
        const bool keep = (mask >> i) & 1;
        pm *= keep ? 1.0 - p(i) : p(i);
        z[i] = keep ? b * pmf.values[i][idx[i]] : 0.0;
      }
      if (pm == 0.0) continue;
      out.z_given_x[xi][key_of(z)] += pm;
      if (px > 0.0) {
        out.z_marginal[key_of(z)] += px * pm;
        for (int i = 0; i < d; ++i) out.zi_marginal[i][z[i]] += px * pm;
      }
    }
  }
  return out;
}

}  // namespace

long DiscretePmf::joint_states() const {
  long n = 1;
  for (int i = 0; i < dims(); ++i) n *= support(i);
  return n;
}

void DiscretePmf::validate() const {
  require(dims() >= 1, ErrorCode::kInvalidArgument, "oracle: empty pmf");
  require(static_cast<long>(joint.size()) == joint_states(),
          ErrorCode::kDimensionMismatch, "oracle: joint table size mismatch");
  double total = 0.0;
  for (double q : joint) {
    require(q >= 0.0, ErrorCode::kInvalidArgument,
            "oracle: negative probability");
    total += q;
  }
  require(std::abs(total - 1.0) <= 1e-12, ErrorCode::kInvalidArgument,
          "oracle: probabilities do not sum to 1");
}

DiscretePmf random_pmf(int dims, int max_support, bool independent, Rng& rng) {
  DiscretePmf pmf;
  pmf.values.resize(dims);
  for (int i = 0; i < dims; ++i) {
    const int support = 2 + rng.uniform_int(max_support - 1);
    std::vector<double>& vals = pmf.values[i];
    while (static_cast<int>(vals.size()) < support) {
      // distinct values bounded away from zero so that a kept coordinate
      // always identifies its source
      double v = rng.uniform(0.3, 3.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      bool dup = false;
      for (double w : vals) dup = dup || std::abs(w - v) < 1e-3;
      if (!dup) vals.push_back(v);
    }
  }
  const long n = pmf.joint_states();
  pmf.joint.resize(n);
  if (independent) {
    std::vector<std::vector<double>> marg(dims);
    for (int i = 0; i < dims; ++i) {
      double total = 0.0;
      for (int s = 0; s < pmf.support(i); ++s) {
        marg[i].push_back(0.05 + rng.uniform());
        total += marg[i].back();
      }
      for (double& q : marg[i]) q /= total;
    }
    std::vector<int> idx(dims, 0);
    for (long xi = 0; xi < n; ++xi) {
      long rem = xi;
      double q = 1.0;
      for (int i = dims - 1; i >= 0; --i) {
        q *= marg[i][rem % pmf.support(i)];
        rem /= pmf.support(i);
      }
      pmf.joint[xi] = q;
    }
  } else {
    double total = 0.0;
    for (long xi = 0; xi < n; ++xi) {
      pmf.joint[xi] = 0.02 + rng.uniform();
      total += pmf.joint[xi];
    }
    for (double& q : pmf.joint) q /= total;
  }
  // exact renormalization pass for the 1e-12 sum invariant
  double total = 0.0;
  for (double q : pmf.joint) total += q;
  for (double& q : pmf.joint) q /= total;
  return pmf;
}

double brute_force_mi(const DiscretePmf& pmf, const Eigen::VectorXd& p) {
  Enumeration e = enumerate(pmf, p);
  double mi = 0.0;
  for (size_t xi = 0; xi < e.z_given_x.size(); ++xi) {
    const double px = e.x_prob[xi];
    if (px == 0.0) continue;
    for (const auto& [zk, pz_x] : e.z_given_x[xi]) {
      const double pz = e.z_marginal.at(zk);
      mi += px * pz_x * std::log(pz_x / pz);
    }
  }
  return mi;
}

double total_correlation(const DiscretePmf& pmf, const Eigen::VectorXd& p) {
  Enumeration e = enumerate(pmf, p);
  double h_joint = 0.0;
  for (const auto& [zk, pz] : e.z_marginal) h_joint -= xlogx(pz);
  double h_sum = 0.0;
  for (const auto& dist : e.zi_marginal)
    for (const auto& [v, q] : dist) h_sum -= xlogx(q);
  return h_sum - h_joint;
}

Eigen::VectorXd marginal_entropies(const DiscretePmf& pmf) {
  pmf.validate();
  const int d = pmf.dims();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(d);
  std::vector<std::vector<double>> marg(d);
  for (int i = 0; i < d; ++i) marg[i].assign(pmf.support(i), 0.0);
  std::vector<int> idx(d, 0);
  for (long xi = 0; xi < pmf.joint_states(); ++xi) {
    long rem = xi;
    for (int i = d - 1; i >= 0; --i) {
      marg[i][rem % pmf.support(i)] += pmf.joint[xi];
      rem /= pmf.support(i);
    }
  }
  for (int i = 0; i < d; ++i)
    for (double q : marg[i]) h(i) -= xlogx(q);
  return h;
}

}  // namespace dropbn::oracle
