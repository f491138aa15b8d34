#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dropbn/errors.hpp"
#include "dropbn/train.hpp"

using namespace dropbn;

namespace {

PairedBatch synthetic_pairs(int n, int d, int relevant, Rng& rng) {
  // each relevant dim carries its own sign factor, shared across the pair;
  // the remaining dims are fresh noise on both sides
  PairedBatch batch;
  batch.x = Matrix(n, d);
  batch.y_source = Matrix(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      if (j < relevant) {
        const double mean = rng.uniform() < 0.5 ? -1.0 : 1.0;
        batch.x(i, j) = mean + 0.3 * rng.normal();
        batch.y_source(i, j) = mean + 0.3 * rng.normal();
      } else {
        batch.x(i, j) = rng.normal();
        batch.y_source(i, j) = rng.normal();
      }
    }
  }
  return batch;
}

TrainableDrop drop_from_logits(const Vector& logits, double temperature) {
  DropParams p;
  p.logits = logits;
  p.temperature = temperature;
  return make_trainable_drop(p);
}

}  // namespace

TEST_CASE("exploration loss decomposition and the beta = 0 case") {
  Rng rng(10);
  const int d = 6;
  PairedBatch batch = synthetic_pairs(16, d, 3, rng);
  FeatureExtractor extractor = identity_extractor(d);
  TrainableDrop drop = drop_from_logits(Vector::Zero(d), 0.5);
  Discriminator disc = make_discriminator(d, d, rng, {16, 8});
  Vector entropies = estimate_entropy_binning(batch.x).entropies;

  IBObjectiveConfig cfg;
  cfg.beta = 0.01;
  cfg.n_dup = 4;

  Rng eval_a(77);
  LossBreakdown full =
      db_exploration_loss(batch, extractor, drop, disc, entropies, cfg,
                          eval_a);
  CHECK(full.total ==
        doctest::Approx(-full.prediction_mi + cfg.beta * full.compression)
            .epsilon(1e-12));
  CHECK(std::abs(full.total - (-full.prediction_mi +
                               cfg.beta * full.compression)) < 1e-9);

  cfg.beta = 0.0;
  Rng eval_b(77);
  LossBreakdown pred_only =
      db_exploration_loss(batch, extractor, drop, disc, entropies, cfg,
                          eval_b);
  CHECK(pred_only.total == doctest::Approx(-pred_only.prediction_mi)
                               .epsilon(1e-12));
}

TEST_CASE("zeroed discriminator makes the loss exactly beta * sum(H)") {
  Rng rng(11);
  const int d = 4;
  PairedBatch batch = synthetic_pairs(8, d, 2, rng);
  FeatureExtractor extractor = identity_extractor(d);
  // p ~ 0 so masks keep everything; disc outputs 0 for any input
  TrainableDrop drop = drop_from_logits(Vector::Constant(d, -40.0), 0.5);
  Discriminator disc = make_discriminator(d, d, rng, {8});
  disc.net.layers.back().weight.value.setZero();
  disc.net.layers.back().bias.value.setZero();
  Vector entropies = estimate_entropy_binning(batch.x).entropies;

  IBObjectiveConfig cfg;
  cfg.beta = 0.7;
  cfg.n_dup = 2;
  LossBreakdown loss =
      db_exploration_loss(batch, extractor, drop, disc, entropies, cfg, rng);
  CHECK(loss.prediction_mi == 0.0);
  CHECK(loss.total ==
        doctest::Approx(cfg.beta * entropies.sum()).epsilon(1e-9));
}

TEST_CASE("exploration loss gradient w.r.t. drop logits matches FD") {
  Rng init_rng(12);
  const int d = 5;
  PairedBatch batch = synthetic_pairs(6, d, 2, init_rng);
  FeatureExtractor extractor = make_extractor(d, {8}, d, init_rng);
  TrainableDrop drop =
      drop_from_logits(Vector::LinSpaced(d, -0.8, 0.9), 0.4);
  Discriminator disc = make_discriminator(d, d, init_rng, {12, 6});
  Vector entropies = estimate_entropy_binning(batch.x).entropies;

  IBObjectiveConfig cfg;
  cfg.beta = 0.05;
  cfg.n_dup = 3;

  auto loss_at = [&](std::uint64_t seed) {
    Rng r(seed);
    ad::Tape tape;
    ExplorationLossVars vars = build_exploration_loss(
        tape, batch, extractor, drop, disc, entropies, cfg, r);
    return std::pair<double, ExplorationLossVars>(
        tape.value(vars.total)(0, 0), vars);
  };

  drop.logits.zero_grad();
  {
    Rng r(99);
    ad::Tape tape;
    ExplorationLossVars vars = build_exploration_loss(
        tape, batch, extractor, drop, disc, entropies, cfg, r);
    tape.backward(vars.total);
  }
  Matrix analytic = drop.logits.grad;

  const double h = 1e-4;
  for (int j = 0; j < d; ++j) {
    const double save = drop.logits.value(0, j);
    drop.logits.value(0, j) = save + h;
    const double up = loss_at(99).first;
    drop.logits.value(0, j) = save - h;
    const double dn = loss_at(99).first;
    drop.logits.value(0, j) = save;
    const double fd = (up - dn) / (2.0 * h);
    const double err = std::abs(analytic(0, j) - fd) /
                       std::max({1.0, std::abs(fd), std::abs(analytic(0, j))});
    CHECK(err < 1e-4);
  }
}

TEST_CASE("gradient flow separation between the two terms") {
  Rng rng(13);
  const int d = 4;
  PairedBatch batch = synthetic_pairs(8, d, 2, rng);
  FeatureExtractor extractor = make_extractor(d, {6}, d, rng);
  TrainableDrop drop = drop_from_logits(Vector::Zero(d), 0.5);
  Discriminator disc = make_discriminator(d, d, rng, {8});
  Vector entropies = estimate_entropy_binning(batch.x).entropies;

  // compression term alone: only the drop logits receive gradient
  {
    for (auto* p : extractor.params()) p->zero_grad();
    for (auto* p : nn::params_of(disc.net)) p->zero_grad();
    drop.logits.zero_grad();
    ad::Tape tape;
    tape.backward(
        compression_term_var(tape, tape.param(drop.logits), entropies));
    CHECK(drop.logits.grad.cwiseAbs().maxCoeff() > 0.0);
    for (auto* p : extractor.params())
      CHECK(p->grad.cwiseAbs().maxCoeff() == 0.0);
    for (auto* p : nn::params_of(disc.net))
      CHECK(p->grad.cwiseAbs().maxCoeff() == 0.0);
  }

  // prediction term alone (beta = 0): extractor, discriminator and logits
  {
    IBObjectiveConfig cfg;
    cfg.beta = 0.0;
    cfg.n_dup = 2;
    for (auto* p : extractor.params()) p->zero_grad();
    for (auto* p : nn::params_of(disc.net)) p->zero_grad();
    drop.logits.zero_grad();
    Rng r(5);
    ad::Tape tape;
    ExplorationLossVars vars = build_exploration_loss(
        tape, batch, extractor, drop, disc, entropies, cfg, r);
    tape.backward(vars.total);
    CHECK(drop.logits.grad.cwiseAbs().maxCoeff() > 0.0);
    bool extractor_touched = false;
    for (auto* p : extractor.params())
      extractor_touched |= p->grad.cwiseAbs().maxCoeff() > 0.0;
    CHECK(extractor_touched);
    bool disc_touched = false;
    for (auto* p : nn::params_of(disc.net))
      disc_touched |= p->grad.cwiseAbs().maxCoeff() > 0.0;
    CHECK(disc_touched);
  }

  // with beta = 0 the compression path contributes exactly nothing: the
  // logits gradient equals the prediction-only gradient bit for bit
  {
    IBObjectiveConfig cfg;
    cfg.beta = 0.0;
    cfg.n_dup = 2;
    drop.logits.zero_grad();
    {
      Rng r(6);
      ad::Tape tape;
      ExplorationLossVars vars = build_exploration_loss(
          tape, batch, extractor, drop, disc, entropies, cfg, r);
      tape.backward(vars.total);
    }
    Matrix with_term = drop.logits.grad;
    drop.logits.zero_grad();
    {
      Rng r(6);
      ad::Tape tape;
      ExplorationLossVars vars = build_exploration_loss(
          tape, batch, extractor, drop, disc, entropies, cfg, r);
      tape.backward(tape.neg(vars.prediction_mi));
    }
    CHECK(with_term == drop.logits.grad);
  }
}

TEST_CASE("duplication changes variance but not the expectation") {
  Rng rng(14);
  const int d = 4;
  PairedBatch batch = synthetic_pairs(12, d, 2, rng);
  FeatureExtractor extractor = identity_extractor(d);
  TrainableDrop drop = drop_from_logits(Vector::Constant(d, 0.3), 0.5);
  Discriminator disc = make_discriminator(d, d, rng, {10});
  Vector entropies = estimate_entropy_binning(batch.x).entropies;

  auto mc_mean = [&](int n_dup, int seeds, double* variance) {
    IBObjectiveConfig cfg;
    cfg.beta = 0.0;
    cfg.n_dup = n_dup;
    double sum = 0.0, sq = 0.0;
    for (int s = 0; s < seeds; ++s) {
      Rng r(1000 + s);
      LossBreakdown loss = db_exploration_loss(batch, extractor, drop, disc,
                                               entropies, cfg, r);
      sum += loss.prediction_mi;
      sq += loss.prediction_mi * loss.prediction_mi;
    }
    const double mean = sum / seeds;
    *variance = sq / seeds - mean * mean;
    return mean;
  };

  const int seeds = 160;
  double var1 = 0.0, var8 = 0.0;
  const double mean1 = mc_mean(1, seeds, &var1);
  const double mean8 = mc_mean(8, seeds, &var8);
  const double sigma = std::sqrt(var1 / seeds + var8 / seeds);
  CHECK(std::abs(mean1 - mean8) <= 2.0 * sigma + 1e-6);
  CHECK(var8 < var1);
}

TEST_CASE("supervised loss endpoints") {
  Rng rng(15);
  const int d = 2, classes = 3;
  // two informative dimensions, labels trivially separable
  Matrix x(9, d);
  std::vector<int> labels;
  for (int i = 0; i < 9; ++i) {
    labels.push_back(i % classes);
    x(i, 0) = labels.back() == 0 ? 1.0 : 0.0;
    x(i, 1) = labels.back() == 1 ? 1.0 : 0.0;
  }
  FeatureExtractor extractor = identity_extractor(d);
  TrainableDrop keep_all = drop_from_logits(Vector::Constant(d, -40.0), 0.5);
  Vector entropies = estimate_entropy_binning(x).entropies;
  IBObjectiveConfig cfg;

  // uniform classifier: prediction term is exactly log C
  nn::Mlp uniform = nn::make_mlp({d, classes}, rng);
  uniform.layers[0].weight.value.setZero();
  uniform.layers[0].bias.value.setZero();
  LossBreakdown at_uniform = db_supervised_loss(
      x, labels, extractor, keep_all, uniform, entropies, 0.0, cfg, rng);
  CHECK(at_uniform.prediction_mi ==
        doctest::Approx(std::log(double(classes))).epsilon(1e-12));

  // near-perfect classifier with beta = 0: loss close to zero
  nn::Mlp sharp = nn::make_mlp({d, classes}, rng);
  sharp.layers[0].weight.value.setZero();
  sharp.layers[0].weight.value(0, 0) = 60.0;
  sharp.layers[0].weight.value(1, 1) = 60.0;
  sharp.layers[0].bias.value.setZero();
  sharp.layers[0].bias.value(0, 2) = 30.0;
  LossBreakdown at_sharp = db_supervised_loss(
      x, labels, extractor, keep_all, sharp, entropies, 0.0, cfg, rng);
  CHECK(at_sharp.total < 1e-6);
}

TEST_CASE("supervised loss gradient w.r.t. drop logits matches FD") {
  Rng rng(16);
  const int d = 4, classes = 3;
  Matrix x = Matrix::Random(10, d);
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) labels.push_back(i % classes);
  FeatureExtractor extractor = make_extractor(d, {6}, d, rng);
  TrainableDrop drop = drop_from_logits(Vector::LinSpaced(d, -0.5, 0.7), 0.3);
  nn::Mlp classifier = nn::make_mlp({d, 8, classes}, rng);
  Vector entropies = estimate_entropy_binning(x).entropies;
  IBObjectiveConfig cfg;
  const double beta = 0.2;

  auto loss_at = [&](std::uint64_t seed) {
    Rng r(seed);
    ad::Tape tape;
    SupervisedLossVars vars = build_supervised_loss(
        tape, x, labels, extractor, drop, classifier, entropies, beta, cfg,
        r);
    return tape.value(vars.total)(0, 0);
  };

  drop.logits.zero_grad();
  {
    Rng r(42);
    ad::Tape tape;
    SupervisedLossVars vars = build_supervised_loss(
        tape, x, labels, extractor, drop, classifier, entropies, beta, cfg,
        r);
    tape.backward(vars.total);
  }
  const double h = 1e-4;
  for (int j = 0; j < d; ++j) {
    const double save = drop.logits.value(0, j);
    drop.logits.value(0, j) = save + h;
    const double up = loss_at(42);
    drop.logits.value(0, j) = save - h;
    const double dn = loss_at(42);
    drop.logits.value(0, j) = save;
    const double fd = (up - dn) / (2.0 * h);
    const double err =
        std::abs(drop.logits.grad(0, j) - fd) /
        std::max({1.0, std::abs(fd), std::abs(drop.logits.grad(0, j))});
    CHECK(err < 1e-4);
  }
}

TEST_CASE("huge beta pushes drop probabilities up on entropic dims") {
  Rng rng(17);
  const int d = 4, classes = 2;
  Matrix x = Matrix::Random(64, d);
  std::vector<int> labels;
  for (int i = 0; i < 64; ++i) labels.push_back(i % classes);
  FeatureExtractor extractor = identity_extractor(d);
  TrainableDrop drop = drop_from_logits(Vector::Zero(d), 0.3);
  nn::Mlp classifier = nn::make_mlp({d, classes}, rng);
  Vector entropies = estimate_entropy_binning(x).entropies;
  IBObjectiveConfig cfg;

  const Vector before = drop.probabilities();
  nn::Adam opt(0.05);
  std::vector<nn::Param*> params{&drop.logits};
  for (int step = 0; step < 150; ++step) {
    nn::zero_grads(params);
    ad::Tape tape;
    SupervisedLossVars vars = build_supervised_loss(
        tape, x, labels, extractor, drop, classifier, entropies, 50.0, cfg,
        rng);
    tape.backward(vars.total);
    opt.step(params);
  }
  const Vector after = drop.probabilities();
  for (int j = 0; j < d; ++j) {
    CHECK(after(j) > before(j));
    CHECK(after(j) > 0.9);
  }
}

TEST_CASE("train_db bookkeeping and separation on the synthetic task") {
  Rng rng(18);
  const int d = 8, relevant = 3;
  PairedBatch buffer = synthetic_pairs(512, d, relevant, rng);

  DbModel model;
  model.extractor = identity_extractor(d);
  {
    Rng init(19);
    model.drop = drop_from_logits(
        init_drop_params(d, -2.0, 1.0, init).logits.transpose(), 0.1);
    model.disc = make_discriminator(d, d, init, {32, 16});
  }

  IBObjectiveConfig cfg;
  cfg.beta = 0.02;
  cfg.n_dup = 4;
  cfg.lr = 1e-2;
  cfg.batch_size = 128;
  cfg.disc_extra_epochs = 8;

  // zero epochs: nothing moves
  Matrix logits_before = model.drop.logits.value;
  cfg.epochs = 0;
  auto empty_trace = train_db(model, buffer, cfg, rng);
  CHECK(empty_trace.empty());
  CHECK(model.drop.logits.value == logits_before);

  cfg.epochs = 60;
  long steps = 0;
  auto trace = train_db(model, buffer, cfg, rng, &steps);
  CHECK(static_cast<long>(trace.size()) == steps);
  CHECK(trace.size() == 60u * (512 / 128));
  for (size_t i = 1; i < trace.size(); ++i)
    CHECK(trace[i].step == trace[i - 1].step + 1);

  const Vector p = model.drop.probabilities();
  double relevant_mean = 0.0, noise_mean = 0.0;
  for (int j = 0; j < relevant; ++j) relevant_mean += p(j) / relevant;
  for (int j = relevant; j < d; ++j) noise_mean += p(j) / (d - relevant);
  CHECK(noise_mean > relevant_mean);
  CHECK(noise_mean > 0.5);
  CHECK(relevant_mean < 0.5);

  CHECK_THROWS_AS(train_db(model, PairedBatch{}, cfg, rng), Error);
}

TEST_CASE("vib forward modes") {
  Rng rng(20);
  VibLayer layer = make_vib_layer(3, {8}, 2, rng);
  Matrix x = Matrix::Random(4, 3);

  Matrix mode1 = vib_forward(layer, x, rng, VibMode::kMode);
  Matrix mode2 = vib_forward(layer, x, rng, VibMode::kMode);
  CHECK(mode1 == mode2);

  // forcing tiny variance makes samples collapse onto the mean
  VibLayer frozen = make_vib_layer(3, {8}, 2, rng);
  for (auto& l : frozen.encoder.layers) {
    l.weight.value.setZero();
    l.bias.value.setZero();
  }
  frozen.encoder.layers.back().bias.value.leftCols(2).setConstant(0.7);
  frozen.encoder.layers.back().bias.value.rightCols(2).setConstant(-80.0);
  Matrix collapsed = vib_forward(frozen, x, rng, VibMode::kSample);
  CHECK((collapsed.array() - 0.7).abs().maxCoeff() < 1e-10);

  // sample mean concentrates on the encoder mean
  frozen.encoder.layers.back().bias.value.rightCols(2).setConstant(0.0);
  const int draws = 10000;
  double acc = 0.0;
  for (int i = 0; i < draws; ++i)
    acc += vib_forward(frozen, x.topRows(1), rng, VibMode::kSample)(0, 0);
  const double se = 1.0 / std::sqrt(double(draws));
  CHECK(std::abs(acc / draws - 0.7) <= 3.0 * se);
}

TEST_CASE("vib kl term matches closed cases and quadrature") {
  Rng rng(21);
  VibLayer layer = make_vib_layer(2, {}, 2, rng);
  for (auto& l : layer.encoder.layers) {
    l.weight.value.setZero();
    l.bias.value.setZero();
  }
  Matrix x = Matrix::Zero(1, 2);
  CHECK(vib_kl_term(layer, x) == doctest::Approx(0.0).epsilon(1e-14));

  layer.encoder.layers.back().bias.value(0, 0) = 1.0;  // mean_0 = 1
  CHECK(vib_kl_term(layer, x) == doctest::Approx(0.5).epsilon(1e-12));

  // random mean / logvar against Simpson-rule integration of KL
  Rng mk(22);
  for (int trial = 0; trial < 5; ++trial) {
    const double mu = mk.uniform(-2.0, 2.0);
    const double logvar = mk.uniform(-1.5, 1.0);
    layer.encoder.layers.back().bias.value.setZero();
    layer.encoder.layers.back().bias.value(0, 0) = mu;
    layer.encoder.layers.back().bias.value(0, 2) = logvar;

    const double sigma = std::exp(0.5 * logvar);
    const int steps = 40000;
    const double lo = mu - 12.0 * sigma, hi = mu + 12.0 * sigma;
    const double dx = (hi - lo) / steps;
    double integral = 0.0;
    for (int i = 0; i <= steps; ++i) {
      const double xv = lo + i * dx;
      const double q = std::exp(-0.5 * (xv - mu) * (xv - mu) /
                                (sigma * sigma)) /
                       (sigma * std::sqrt(2.0 * std::numbers::pi));
      const double log_ratio = -std::log(sigma) -
                               0.5 * (xv - mu) * (xv - mu) / (sigma * sigma) +
                               0.5 * xv * xv;
      const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      integral += w * q * log_ratio;
    }
    integral *= dx / 3.0;
    CHECK(vib_kl_term(layer, x) ==
          doctest::Approx(integral).epsilon(1e-6));
  }

  // nonnegativity on random inputs
  VibLayer random_layer = make_vib_layer(3, {6}, 2, rng);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix xin = Matrix::Random(5, 3);
    CHECK(vib_kl_term(random_layer, xin) >= 0.0);
  }
}
