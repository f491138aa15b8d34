#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dropbn/core.hpp"
#include "dropbn/errors.hpp"
#include "dropbn/nn.hpp"
#include "support/mi_oracle.hpp"

using namespace dropbn;
using Eigen::VectorXd;

namespace {

DropParams params_from(std::initializer_list<double> logits,
                       double temperature = 0.1) {
  DropParams p;
  p.logits = Vector(static_cast<Eigen::Index>(logits.size()));
  Eigen::Index i = 0;
  for (double v : logits) p.logits(i++) = v;
  p.temperature = temperature;
  return p;
}

// Logits whose sigmoid equals the requested drop probabilities.
DropParams params_for_probs(const Vector& probs, double temperature = 0.1) {
  DropParams p;
  p.temperature = temperature;
  p.logits = probs.unaryExpr(
      [](double q) { return std::log(q) - std::log1p(-q); });
  return p;
}

}  // namespace

TEST_CASE("drop probabilities are the sigmoid of the logits") {
  CHECK(drop_probabilities(params_from({0, 0, 0})).isApproxToConstant(0.5));

  const Vector p = drop_probabilities(params_from({-2.0, 1.0}));
  CHECK(p(0) == doctest::Approx(1.0 / (1.0 + std::exp(2.0))).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
  CHECK(p(0) == doctest::Approx(0.1192).epsilon(1e-3));
  CHECK(p(1) == doctest::Approx(0.7311).epsilon(1e-3));

  // monotone toward 1 as the logit grows
  double prev = 0.0;
  for (double logit : {0.0, 5.0, 20.0, 80.0, 400.0}) {
    const double cur = drop_probabilities(params_from({logit}))(0);
    CHECK(cur >= prev);
    prev = cur;
  }
  CHECK(prev == doctest::Approx(1.0));
}

TEST_CASE("drop parameter initialization") {
  Rng rng(3);
  DropParams p = init_drop_params(128, -2.0, 1.0, rng);
  const Vector probs = drop_probabilities(p);
  const double lo = 1.0 / (1.0 + std::exp(2.0));
  const double hi = 1.0 / (1.0 + std::exp(-1.0));
  for (int i = 0; i < p.dim(); ++i) {
    CHECK(p.logits(i) >= -2.0);
    CHECK(p.logits(i) <= 1.0);
    CHECK(probs(i) >= lo);
    CHECK(probs(i) <= hi);
  }

  Rng degenerate(9);
  DropParams z = init_drop_params(5, 0.0, 0.0, degenerate);
  CHECK(drop_probabilities(z).isApproxToConstant(0.5));

  Rng a(17), b(17);
  CHECK(init_drop_params(4, -2, 1, a).logits ==
        init_drop_params(4, -2, 1, b).logits);

  CHECK_THROWS_AS(init_drop_params(0, -2, 1, rng), Error);
  CHECK_THROWS_AS(init_drop_params(-3, -2, 1, rng), Error);
}

TEST_CASE("scale factor") {
  CHECK(scale_factor(Vector::Constant(4, 0.5)) == doctest::Approx(2.0));
  CHECK(scale_factor(Vector::Zero(6)) == doctest::Approx(1.0));
  CHECK(scale_factor(Vector::Constant(2, 0.9)) ==
        doctest::Approx(10.0).epsilon(1e-12));
  CHECK_THROWS_AS(scale_factor(Vector::Ones(3)), Error);
  Vector nearly_all = Vector::Constant(4, 1.0 - 1e-9);
  CHECK_THROWS_AS(scale_factor(nearly_all), Error);
}

TEST_CASE("scale normalization identity holds to 1e-12") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + rng.uniform_int(12);
    Vector p(d);
    for (int i = 0; i < d; ++i) p(i) = rng.uniform(0.0, 0.95);
    const double b = scale_factor(p);
    const double mean_keep = (b * (Vector::Ones(d) - p)).mean();
    CHECK(std::abs(mean_keep - 1.0) <= 1e-12);
  }
}

TEST_CASE("hard mask sampling") {
  Rng rng(5);
  DropParams p = params_for_probs((Vector(3) << 1e-12, 1.0 - 1e-12, 0.3)
                                      .finished());
  MaskBatch mask = sample_mask_hard(p, 10000, rng);
  CHECK(mask.mode == MaskMode::kHard);
  for (int i = 0; i < mask.values.rows(); ++i) {
    CHECK(mask.values(i, 0) == 1.0);  // keep probability ~1
    CHECK(mask.values(i, 1) == 0.0);  // keep probability ~0
    CHECK((mask.values(i, 2) == 0.0 || mask.values(i, 2) == 1.0));
  }
  const double keep_rate = mask.values.col(2).mean();
  const double se = std::sqrt(0.3 * 0.7 / 10000.0);
  CHECK(std::abs(keep_rate - 0.7) <= 3.0 * se);
}

TEST_CASE("concrete relaxation of the keep variable") {
  // at u = 0.5 and p = 0.5 the relaxed sample sits exactly at 0.5
  for (double temperature : {0.01, 0.1, 1.0, 10.0}) {
    nn::Param logits(Matrix::Zero(1, 1));
    ad::Tape tape;
    ad::Var mask = relaxed_keep_mask_var(tape, tape.param(logits),
                                         Matrix::Constant(1, 1, 0.5),
                                         temperature);
    CHECK(tape.value(mask)(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  }

  // low temperature: thresholded samples reproduce Bernoulli(1-p)
  Rng rng(7);
  DropParams p = params_for_probs(Vector::Constant(1, 0.3), 0.01);
  MaskBatch relaxed = sample_mask_concrete(p, 10000, rng);
  CHECK(relaxed.mode == MaskMode::kRelaxed);
  double above = 0.0;
  for (int i = 0; i < relaxed.values.rows(); ++i) {
    CHECK(relaxed.values(i, 0) > 0.0);
    CHECK(relaxed.values(i, 0) < 1.0);
    if (relaxed.values(i, 0) > 0.5) above += 1.0;
  }
  const double se = std::sqrt(0.3 * 0.7 / 10000.0);
  CHECK(std::abs(above / 10000.0 - 0.7) <= 3.0 * se);

  // high temperature: samples concentrate near 0.5, tighter than hard draws
  Rng rng_hi(8);
  DropParams hi = params_for_probs(Vector::Constant(1, 0.3), 10.0);
  MaskBatch smooth = sample_mask_concrete(hi, 10000, rng_hi);
  auto std_of = [](const Matrix& col) {
    const double mean = col.mean();
    return std::sqrt((col.array() - mean).square().mean());
  };
  Rng rng_hard(9);
  MaskBatch hard = sample_mask_hard(hi, 10000, rng_hard);
  CHECK(std_of(smooth.values) < std_of(hard.values));
  double near_half = 0.0;
  for (int i = 0; i < smooth.values.rows(); ++i)
    if (std::abs(smooth.values(i, 0) - 0.5) < 0.1) near_half += 1.0;
  CHECK(near_half / 10000.0 > 0.9);

  DropParams bad = params_for_probs(Vector::Constant(1, 0.3), -1.0);
  CHECK_THROWS_AS(sample_mask_concrete(bad, 10, rng), Error);
}

TEST_CASE("stochastic compression") {
  Rng rng(31);
  // no dropping: identity
  DropParams none = params_for_probs(Vector::Constant(3, 1e-14));
  Matrix x = Matrix::Random(20, 3);
  CompressedBatch z = compress_stochastic(x, none, MaskMode::kHard, rng);
  CHECK(z.scale == doctest::Approx(1.0).epsilon(1e-10));
  CHECK((z.values - x).cwiseAbs().maxCoeff() < 1e-10);

  // z = b * mask .* x, and rows drawing mask [1, 0] give [6, 0]
  DropParams half = params_from({0.0, 0.0});
  Matrix row(1, 2);
  row << 3.0, 5.0;
  bool seen_10 = false;
  for (int trial = 0; trial < 64 && !seen_10; ++trial) {
    CompressedBatch c = compress_stochastic(row, half, MaskMode::kHard, rng);
    CHECK(c.scale == doctest::Approx(2.0));
    CHECK((c.values - c.scale * c.mask.values.cwiseProduct(row))
              .cwiseAbs()
              .maxCoeff() == 0.0);
    if (c.mask.values(0, 0) == 1.0 && c.mask.values(0, 1) == 0.0) {
      seen_10 = true;
      CHECK(c.values(0, 0) == doctest::Approx(6.0));
      CHECK(c.values(0, 1) == 0.0);
    }
  }
  CHECK(seen_10);

  // E over masks of mean_i(z_ji / x_ji) = 1
  Rng mc(33);
  DropParams p = params_from({-1.0, 0.5, 0.2, -0.3});
  Matrix big = Matrix::Random(2000, 4).array() + 2.0;  // no zeros
  CompressedBatch c = compress_stochastic(big, p, MaskMode::kHard, mc);
  const double mean_ratio = c.values.cwiseQuotient(big).mean();
  CHECK(mean_ratio == doctest::Approx(1.0).epsilon(0.02));

  DropParams degenerate = params_for_probs(Vector::Constant(2, 1.0 - 1e-12));
  CHECK_THROWS_AS(compress_stochastic(big.leftCols(2), degenerate,
                                      MaskMode::kHard, rng),
                  Error);
}

TEST_CASE("deterministic compression") {
  DropParams p = params_for_probs((Vector(2) << 0.9, 0.1).finished());
  Matrix x(1, 2);
  x << 3.0, 5.0;
  CompressedBatch z = compress_deterministic(x, p);
  CHECK(z.values(0, 0) == 0.0);
  CHECK(z.values(0, 1) == doctest::Approx(10.0));
  CHECK(z.scale == doctest::Approx(2.0));

  DropParams low = params_for_probs(Vector::Constant(2, 0.2));
  CompressedBatch id = compress_deterministic(x, low);
  CHECK(id.values == x);
  CHECK(id.scale == 1.0);

  // bit-identical across calls
  CompressedBatch again = compress_deterministic(x, p);
  CHECK(again.values == z.values);

  DropParams all = params_for_probs(Vector::Constant(2, 0.8));
  CHECK_THROWS_AS(compress_deterministic(x, all), Error);
}

TEST_CASE("binning entropy estimation") {
  Matrix constant = Matrix::Constant(100, 1, 4.2);
  EntropyEstimate h0 = estimate_entropy_binning(constant, 32);
  CHECK(h0.entropies(0) == 0.0);

  // one sample in each of 32 bins: uniform over bins
  Matrix spread(32, 1);
  for (int i = 0; i < 32; ++i) spread(i, 0) = i + 0.5;
  EntropyEstimate hu = estimate_entropy_binning(spread, 32);
  CHECK(hu.entropies(0) == doctest::Approx(std::log(32.0)).epsilon(1e-12));
  CHECK(hu.entropies(0) <= std::log(32.0) + 1e-12);

  // standard normal column against an independent recount oracle
  Rng rng(41);
  const int n = 100000;
  Matrix gauss(n, 1);
  for (int i = 0; i < n; ++i) gauss(i, 0) = rng.normal();
  EntropyEstimate hg = estimate_entropy_binning(gauss, 32);
  const double lo = gauss.minCoeff(), hi = gauss.maxCoeff();
  std::vector<int> counts(32, 0);
  for (int i = 0; i < n; ++i) {
    int b = static_cast<int>((gauss(i, 0) - lo) / (hi - lo) * 32.0);
    if (b == 32) b = 31;
    counts[b] += 1;
  }
  double recount = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    const double q = static_cast<double>(c) / n;
    recount -= q * std::log(q);
  }
  CHECK(hg.entropies(0) == doctest::Approx(recount).epsilon(0.05));

  CHECK_THROWS_AS(estimate_entropy_binning(Matrix::Zero(1, 3), 32), Error);
  CHECK_THROWS_AS(estimate_entropy_binning(gauss, 1), Error);

  // bin edges span the observed range
  Vector edges = hg.bin_edges(0);
  CHECK(edges(0) == doctest::Approx(lo));
  CHECK(edges(32) == doctest::Approx(hi));
}

TEST_CASE("compression term") {
  CHECK(compression_term(Vector::Constant(3, 2.0), Vector::Ones(3)) == 0.0);
  CHECK(compression_term(Vector::Constant(2, 1.0),
                          Vector::Constant(2, 0.5)) == doctest::Approx(1.0));
  Vector h(3);
  h << 2.0, 0.0, 3.0;
  Vector p(3);
  p << 0.1, 0.9, 0.5;
  CHECK(compression_term(h, p) == doctest::Approx(3.3).epsilon(1e-12));
  CHECK_THROWS_AS(compression_term(h, Vector::Ones(2)), Error);

  // strictly decreasing in every p_i with H_i > 0
  Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    Vector hr(4), pr(4);
    for (int i = 0; i < 4; ++i) {
      hr(i) = 0.1 + rng.uniform();
      pr(i) = rng.uniform(0.05, 0.9);
    }
    const double base = compression_term(hr, pr);
    for (int i = 0; i < 4; ++i) {
      Vector bumped = pr;
      bumped(i) += 0.05;
      CHECK(compression_term(hr, bumped) < base);
    }
  }
}

TEST_CASE("brute-force MI oracle basics") {
  oracle::DiscretePmf uniform2;
  uniform2.values = {{1.0, 2.0}};
  uniform2.joint = {0.5, 0.5};

  // everything dropped: Z is constant zero
  CHECK(oracle::brute_force_mi(uniform2, Vector::Constant(1, 1.0)) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // single dimension: bound is tight, I = H(X)(1-p)
  const double mi = oracle::brute_force_mi(uniform2,
                                           Vector::Constant(1, 0.5));
  CHECK(std::abs(mi - 0.5 * std::log(2.0)) <= 1e-9);

  // independent dimensions: exact equality with the tractable term
  Rng rng(60);
  for (int trial = 0; trial < 10; ++trial) {
    oracle::DiscretePmf pmf = oracle::random_pmf(3, 4, true, rng);
    Vector p(3);
    for (int i = 0; i < 3; ++i) p(i) = rng.uniform(0.05, 0.9);
    const Vector h = oracle::marginal_entropies(pmf);
    const double exact = oracle::brute_force_mi(pmf, p);
    const double bound = compression_term(h, p);
    CHECK(std::abs(exact - bound) <= 1e-9);
  }

  oracle::DiscretePmf huge;
  huge.values.assign(21, {1.0, 2.0});
  huge.joint.assign(1 << 21, 1.0 / (1 << 21));
  CHECK_THROWS_AS(oracle::brute_force_mi(huge, Vector::Constant(21, 0.5)),
                  Error);
}

TEST_CASE("upper bound and total-correlation gap on correlated pmfs") {
  Rng rng(61);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = 1 + rng.uniform_int(3);
    oracle::DiscretePmf pmf =
        oracle::random_pmf(d, 4, trial % 2 == 0, rng);
    Vector p(d);
    for (int i = 0; i < d; ++i) p(i) = rng.uniform(0.05, 0.9);
    const Vector h = oracle::marginal_entropies(pmf);
    const double exact = oracle::brute_force_mi(pmf, p);
    const double bound = compression_term(h, p);
    CHECK(exact <= bound + 1e-9);
    const double tc = oracle::total_correlation(pmf, p);
    CHECK(std::abs(bound - exact - tc) <= 1e-9);
  }
}

TEST_CASE("gradients flow through relaxed compression and the scale") {
  Rng rng(71);
  const int n = 4, d = 5;
  Matrix x = Matrix::Random(n, d);
  Matrix u = draw_uniform(n, d, rng);
  Vector h(d);
  for (int i = 0; i < d; ++i) h(i) = 0.2 + rng.uniform();

  nn::Param logits(Matrix::Random(1, d) * 0.8);

  // loss = compression term + smooth function of the compressed batch
  auto build = [&](ad::Tape& t, ad::Var lg) {
    ad::Var z = compress_relaxed_var(t, t.constant(x), lg, u, 0.4, false);
    ad::Var smooth = t.mean_all(t.square(t.sigmoid(z)));
    return t.add(smooth, compression_term_var(t, lg, h));
  };

  logits.zero_grad();
  {
    ad::Tape tape;
    tape.backward(build(tape, tape.param(logits)));
  }
  Matrix analytic = logits.grad;

  const double step = 1e-4;
  for (int j = 0; j < d; ++j) {
    const double save = logits.value(0, j);
    logits.value(0, j) = save + step;
    ad::Tape tp;
    const double up = tp.value(build(tp, tp.param(logits)))(0, 0);
    logits.value(0, j) = save - step;
    ad::Tape tm;
    const double dn = tm.value(build(tm, tm.param(logits)))(0, 0);
    logits.value(0, j) = save;
    const double fd = (up - dn) / (2.0 * step);
    CHECK(std::abs(analytic(0, j) - fd) /
              std::max({1.0, std::abs(fd), std::abs(analytic(0, j))}) <
          1e-4);
  }

  // detached scale still produces valid gradients (just different ones)
  nn::Param logits2(logits.value);
  logits2.zero_grad();
  ad::Tape tape2;
  ad::Var z2 = compress_relaxed_var(tape2, tape2.constant(x),
                                    tape2.param(logits2), u, 0.4, true);
  tape2.backward(tape2.mean_all(tape2.square(z2)));
  CHECK(logits2.grad.cwiseAbs().maxCoeff() > 0.0);
}
