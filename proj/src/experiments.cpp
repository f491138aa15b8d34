#include "dropbn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "dropbn/checkpoint.hpp"
#include "dropbn/env.hpp"
#include "dropbn/errors.hpp"
#include "dropbn/metrics.hpp"
#include "dropbn/rl.hpp"
#include "dropbn/svgplot.hpp"
#include "dropbn/train.hpp"

namespace dropbn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// fixed stream tags so every consumer gets an independent seeded stream
enum Stream : std::uint64_t {
  kDataStream = 1,
  kInitStream = 2,
  kTrainStream = 3,
  kEvalStream = 4,
  kProbeStream = 5,
  kEnvStream = 6,
  kPolicyStream = 7,
  kIbStream = 8,
};

Rng stream(const ExperimentConfig& config, std::uint64_t tag) {
  Rng root(config.seed);
  return root.split(tag);
}

struct LabeledData {
  Matrix x;
  std::vector<int> labels;
};

struct NuisanceData {
  Matrix x;
  std::vector<int> primary;
  std::vector<int> nuisance;
};

// Paired views for the prediction term: relevant dims share a per-sample
// sign factor across the pair, the rest is independent noise.
PairedBatch make_factor_pairs(int n, int d, int relevant, double sigma,
                              Rng& rng) {
  PairedBatch batch;
  batch.x = Matrix(n, d);
  batch.y_source = Matrix(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      if (j < relevant) {
        const double mean = rng.uniform() < 0.5 ? -1.0 : 1.0;
        batch.x(i, j) = mean + sigma * rng.normal();
        batch.y_source(i, j) = mean + sigma * rng.normal();
      } else {
        batch.x(i, j) = rng.normal();
        batch.y_source(i, j) = rng.normal();
      }
    }
  }
  return batch;
}

// Four-class dataset over two label bits. `strong` dims carry bit 0 in
// their per-dimension mean; `parity_pairs` pairs of dims encode bit 1 only
// jointly (each dim alone is symmetric across classes), which univariate
// feature scoring cannot see. Remaining dims are standard normal noise.
LabeledData make_parity_dataset(int n, int d, int strong, int parity_pairs,
                                double sigma, Rng& rng) {
  const int relevant = strong + 2 * parity_pairs;
  require(relevant <= d, ErrorCode::kConfig,
          "parity dataset: more informative dims than d");
  LabeledData data;
  data.x = Matrix(n, d);
  data.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int label = rng.uniform_int(4);
    const int b0 = label & 1;
    const int b1 = (label >> 1) & 1;
    data.labels[i] = label;
    int j = 0;
    for (int s = 0; s < strong; ++s, ++j)
      data.x(i, j) = (2.0 * b0 - 1.0) + sigma * rng.normal();
    for (int pp = 0; pp < parity_pairs; ++pp) {
      const double carrier = rng.uniform() < 0.5 ? -1.0 : 1.0;
      const double partner = carrier * (2.0 * b1 - 1.0);
      data.x(i, j++) = carrier + sigma * rng.normal();
      data.x(i, j++) = partner + sigma * rng.normal();
    }
    for (; j < d; ++j) data.x(i, j) = rng.normal();
  }
  return data;
}

// Primary and nuisance labels drive disjoint input blocks; the rest is
// noise. Both labels are four-way with alternating-bit mean patterns.
NuisanceData make_nuisance_dataset(int n, int d, int block, double sigma,
                                   Rng& rng) {
  require(2 * block <= d, ErrorCode::kConfig,
          "nuisance dataset: blocks exceed d");
  NuisanceData data;
  data.x = Matrix(n, d);
  data.primary.resize(n);
  data.nuisance.resize(n);
  auto mean_of = [](int label, int j) {
    return 2.0 * ((label >> (j % 2)) & 1) - 1.0;
  };
  for (int i = 0; i < n; ++i) {
    data.primary[i] = rng.uniform_int(4);
    data.nuisance[i] = rng.uniform_int(4);
    int j = 0;
    for (int b = 0; b < block; ++b, ++j)
      data.x(i, j) = mean_of(data.primary[i], b) + sigma * rng.normal();
    for (int b = 0; b < block; ++b, ++j)
      data.x(i, j) = mean_of(data.nuisance[i], b) + sigma * rng.normal();
    for (; j < d; ++j) data.x(i, j) = rng.normal();
  }
  return data;
}

double accuracy_of(const nn::Mlp& classifier, const Matrix& z,
                   const std::vector<int>& labels) {
  Matrix logits = nn::mlp_forward_value(classifier, z);
  int correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

// One Monte Carlo hard-mask sample of the stochastic representation.
Matrix stochastic_eval_repr(const Matrix& features, const TrainableDrop& drop,
                            Rng& rng) {
  return compress_stochastic(features, drop.snapshot(), MaskMode::kHard, rng)
      .values;
}

Matrix deterministic_repr(const Matrix& features, const TrainableDrop& drop) {
  return compress_deterministic(features, drop.snapshot()).values;
}

std::vector<int> minibatch_indices(int n, int batch, Rng& rng) {
  std::vector<int> idx(batch);
  for (int i = 0; i < batch; ++i) idx[i] = rng.uniform_int(n);
  return idx;
}

IBObjectiveConfig ib_config_from(const ExperimentConfig& config) {
  IBObjectiveConfig cfg;
  cfg.beta = config.num("train.beta", cfg.beta);
  cfg.n_dup = config.integer("train.n_dup", 8);
  cfg.temperature = config.num("model.temperature", 0.1);
  cfg.lr = config.num("train.lr", 1e-3);
  cfg.batch_size = config.integer("train.batch_size", 128);
  cfg.disc_extra_epochs = config.integer("train.disc_extra_epochs", 8);
  cfg.detach_scale = config.flag("model.detach_scale", false);
  cfg.entropy_bins = config.integer("train.entropy_bins", 32);
  return cfg;
}

TrainableDrop init_drop_from(const ExperimentConfig& config, int d,
                             Rng& rng) {
  DropParams params = init_drop_params(
      d, config.num("model.init_logit_lo", -2.0),
      config.num("model.init_logit_hi", 1.0), rng,
      config.num("model.temperature", 0.1));
  return make_trainable_drop(params);
}

json run_header(const ExperimentConfig& config) {
  json report;
  report["kind"] = config.kind;
  report["seed"] = config.seed;
  report["d"] = config.integer("model.d", 32);
  report["beta"] = config.num("train.beta", 0.0);
  return report;
}

void save_report(const json& report, const std::string& out_dir) {
  std::ofstream out(fs::path(out_dir) / "report.json");
  require(out.good(), ErrorCode::kIo, "cannot write report.json");
  out << report.dump(2) << "\n";
}

json load_report(const std::string& run_dir) {
  std::ifstream in(fs::path(run_dir) / "report.json");
  require(in.good(), ErrorCode::kIo,
          "missing report.json in reference run: " + run_dir);
  return json::parse(in);
}

std::vector<double> p_histogram(const Vector& p, int buckets) {
  std::vector<double> hist(buckets, 0.0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    int b = static_cast<int>(p(i) * buckets);
    b = std::clamp(b, 0, buckets - 1);
    hist[b] += 1.0;
  }
  return hist;
}

}  // namespace

RunResult run_feature_identification(const ExperimentConfig& config) {
  const int d = config.integer("model.d", 32);
  const int relevant = config.integer("data.relevant_dims", 8);
  const int n_train = config.integer("data.n_train", 4096);
  const double sigma = config.num("data.noise_sigma", 0.3);
  const int steps_target = config.integer("train.steps", 2000);
  const int log_interval_epochs = 1;

  write_config_echo(config, config.out_dir);

  Rng data_rng = stream(config, kDataStream);
  PairedBatch buffer = make_factor_pairs(n_train, d, relevant, sigma,
                                         data_rng);

  Rng init_rng = stream(config, kInitStream);
  DbModel model;
  model.extractor = identity_extractor(d);
  model.drop = init_drop_from(config, d, init_rng);
  model.disc = make_discriminator(d, d, init_rng,
                                  config.integers("model.disc_hidden",
                                                  {64, 32, 16}));

  IBObjectiveConfig cfg = ib_config_from(config);
  cfg.epochs = 1;

  CsvWriter metrics(
      (fs::path(config.out_dir) / "metrics.csv").string(),
      {"step", "total", "prediction_mi", "compression", "mean_p_relevant",
       "mean_p_noise", "partition_accuracy"});
  const int hist_buckets = 20;
  std::vector<std::string> hist_cols{"step"};
  for (int b = 0; b < hist_buckets; ++b)
    hist_cols.push_back("p" + std::to_string(b));
  CsvWriter hist_csv((fs::path(config.out_dir) / "p_hist.csv").string(),
                     hist_cols);

  auto partition_accuracy = [&](const Vector& p) {
    int correct = 0;
    for (int j = 0; j < d; ++j) {
      const bool predicted_noise = p(j) > 0.5;
      const bool is_noise = j >= relevant;
      if (predicted_noise == is_noise) ++correct;
    }
    return static_cast<double>(correct) / d;
  };

  Rng train_rng = stream(config, kTrainStream);
  long steps_done = 0;
  int epoch = 0;
  while (steps_done < steps_target) {
    auto trace = train_db(model, buffer, cfg, train_rng, &steps_done);
    ++epoch;
    if (epoch % log_interval_epochs == 0 || steps_done >= steps_target) {
      const Vector p = model.drop.probabilities();
      double mean_rel = 0.0, mean_noise = 0.0;
      for (int j = 0; j < relevant; ++j) mean_rel += p(j) / relevant;
      for (int j = relevant; j < d; ++j) mean_noise += p(j) / (d - relevant);
      const auto& last = trace.back();
      metrics.row({static_cast<double>(steps_done), last.total,
                   last.prediction_mi, last.compression, mean_rel, mean_noise,
                   partition_accuracy(p)});
      std::vector<double> hist_row{static_cast<double>(steps_done)};
      for (double h : p_histogram(p, hist_buckets)) hist_row.push_back(h);
      hist_csv.row(hist_row);
    }
  }

  const Vector p = model.drop.probabilities();
  json report = run_header(config);
  report["steps"] = steps_done;
  report["partition_accuracy"] = partition_accuracy(p);
  report["relevant_dims"] = relevant;
  double mean_rel = 0.0, mean_noise = 0.0;
  for (int j = 0; j < relevant; ++j) mean_rel += p(j) / relevant;
  for (int j = relevant; j < d; ++j) mean_noise += p(j) / (d - relevant);
  report["mean_p_relevant"] = mean_rel;
  report["mean_p_noise"] = mean_noise;
  report["drop_probabilities"] = std::vector<double>(p.data(),
                                                     p.data() + p.size());

  Checkpoint ckpt;
  ckpt.add_param("drop.logits", model.drop.logits);
  ckpt.add_scalar("drop.temperature", model.drop.temperature);
  ckpt.add_mlp("disc", model.disc.net);
  ckpt.save((fs::path(config.out_dir) / "checkpoint").string());

  save_report(report, config.out_dir);
  return RunResult{report};
}

namespace {

struct SupervisedOutcome {
  TrainableDrop drop;
  nn::Mlp classifier;
  double acc_stochastic = 0.0;
  double acc_deterministic = 0.0;
  int retained = 0;
  std::vector<int> kept_dims;
};

SupervisedOutcome train_supervised_db(const ExperimentConfig& config,
                                      const LabeledData& train,
                                      const LabeledData& test, double beta) {
  const int d = static_cast<int>(train.x.cols());
  const int classes =
      1 + *std::max_element(train.labels.begin(), train.labels.end());
  Rng init_rng = stream(config, kInitStream);
  FeatureExtractor extractor = identity_extractor(d);
  TrainableDrop drop = init_drop_from(config, d, init_rng);
  std::vector<int> cls_widths{d};
  for (int h : config.integers("model.classifier_hidden", {64}))
    cls_widths.push_back(h);
  cls_widths.push_back(classes);
  nn::Mlp classifier = nn::make_mlp(cls_widths, init_rng);

  IBObjectiveConfig cfg = ib_config_from(config);
  const int steps = config.integer("train.steps", 1500);
  const int batch = cfg.batch_size;
  const Vector entropies =
      estimate_entropy_binning(train.x, cfg.entropy_bins).entropies;

  std::vector<nn::Param*> params = nn::params_of(classifier);
  params.push_back(&drop.logits);
  nn::Adam opt(cfg.lr);
  Rng train_rng = stream(config, kTrainStream);

  const int n = static_cast<int>(train.x.rows());
  for (int step = 0; step < steps; ++step) {
    const std::vector<int> idx = minibatch_indices(n, batch, train_rng);
    Matrix xb(batch, d);
    std::vector<int> yb(batch);
    for (int r = 0; r < batch; ++r) {
      xb.row(r) = train.x.row(idx[r]);
      yb[r] = train.labels[idx[r]];
    }
    nn::zero_grads(params);
    ad::Tape tape;
    SupervisedLossVars vars =
        build_supervised_loss(tape, xb, yb, extractor, drop, classifier,
                              entropies, beta, cfg, train_rng);
    tape.backward(vars.total);
    opt.step(params);
  }

  SupervisedOutcome out{std::move(drop), std::move(classifier)};
  Rng eval_rng = stream(config, kEvalStream);
  out.acc_stochastic = accuracy_of(
      out.classifier, stochastic_eval_repr(test.x, out.drop, eval_rng),
      test.labels);
  const Vector p = out.drop.probabilities();
  out.retained = deterministic_kept_count(p);
  if (out.retained > 0) {
    out.acc_deterministic = accuracy_of(
        out.classifier, deterministic_repr(test.x, out.drop), test.labels);
    for (int j = 0; j < d; ++j)
      if (p(j) < 0.5) out.kept_dims.push_back(j);
  }
  return out;
}

LabeledData parity_train_split(const ExperimentConfig& config, bool test) {
  const int d = config.integer("model.d", 32);
  const int strong = config.integer("data.strong_dims", 4);
  const int pairs = config.integer("data.parity_pairs", 2);
  const double sigma = config.num("data.noise_sigma", 0.4);
  const int n_train = config.integer("data.n_train", 4096);
  const int n_test = config.integer("data.n_test", 2000);
  Rng data_rng = stream(config, kDataStream);
  LabeledData train = make_parity_dataset(n_train, d, strong, pairs, sigma,
                                          data_rng);
  LabeledData test_data = make_parity_dataset(n_test, d, strong, pairs, sigma,
                                              data_rng);
  return test ? test_data : train;
}

}  // namespace

RunResult run_supervised(const ExperimentConfig& config) {
  write_config_echo(config, config.out_dir);
  LabeledData train = parity_train_split(config, false);
  LabeledData test = parity_train_split(config, true);
  const double beta = config.num("train.beta", 0.01);

  SupervisedOutcome out = train_supervised_db(config, train, test, beta);

  json report = run_header(config);
  report["beta"] = beta;
  report["accuracy_stochastic"] = out.acc_stochastic;
  report["accuracy_deterministic"] = out.acc_deterministic;
  report["retained"] = out.retained;
  report["kept_dims"] = out.kept_dims;
  const Vector p = out.drop.probabilities();
  report["drop_probabilities"] =
      std::vector<double>(p.data(), p.data() + p.size());

  Checkpoint ckpt;
  ckpt.add_param("drop.logits", out.drop.logits);
  ckpt.add_scalar("drop.temperature", out.drop.temperature);
  ckpt.add_mlp("classifier", out.classifier);
  ckpt.save((fs::path(config.out_dir) / "checkpoint").string());

  save_report(report, config.out_dir);
  return RunResult{report};
}

RunResult run_feature_selection_baseline(const ExperimentConfig& config) {
  const std::string reference = config.text("experiment.reference_run", "");
  require(!reference.empty(), ErrorCode::kConfig,
          "feature_selection: experiment.reference_run is required");
  json ref_report = load_report(reference);
  require(ref_report.value("d", -1) == config.integer("model.d", 32),
          ErrorCode::kConfig,
          "feature_selection: reference run has a different d");
  const int m = ref_report.value("retained", 0);
  require(m >= 1, ErrorCode::kConfig,
          "feature_selection: reference run retained no dimensions");

  write_config_echo(config, config.out_dir);
  LabeledData train = parity_train_split(config, false);
  LabeledData test = parity_train_split(config, true);
  const int d = static_cast<int>(train.x.cols());

  Vector scores = knn_mi_scores(train.x, train.labels,
                                config.integer("train.knn_k", 3));
  std::vector<int> selected = select_top_features(scores, m);

  Matrix train_sub(train.x.rows(), m), test_sub(test.x.rows(), m);
  for (int j = 0; j < m; ++j) {
    train_sub.col(j) = train.x.col(selected[j]);
    test_sub.col(j) = test.x.col(selected[j]);
  }

  const int classes =
      1 + *std::max_element(train.labels.begin(), train.labels.end());
  Rng init_rng = stream(config, kInitStream);
  std::vector<int> widths{m};
  for (int h : config.integers("model.classifier_hidden", {64}))
    widths.push_back(h);
  widths.push_back(classes);
  nn::Mlp classifier = nn::make_mlp(widths, init_rng);

  const int steps = config.integer("train.steps", 1500);
  const int batch = config.integer("train.batch_size", 128);
  std::vector<nn::Param*> params = nn::params_of(classifier);
  nn::Adam opt(config.num("train.lr", 1e-3));
  Rng train_rng = stream(config, kTrainStream);
  const int n = static_cast<int>(train_sub.rows());
  for (int step = 0; step < steps; ++step) {
    const std::vector<int> idx = minibatch_indices(n, batch, train_rng);
    Matrix xb(batch, m);
    std::vector<int> yb(batch);
    for (int r = 0; r < batch; ++r) {
      xb.row(r) = train_sub.row(idx[r]);
      yb[r] = train.labels[idx[r]];
    }
    nn::zero_grads(params);
    ad::Tape tape;
    ad::Var logits = nn::mlp_forward(tape, classifier, tape.constant(xb));
    ad::Var nll = tape.neg(
        tape.mean_all(tape.pick_per_row(tape.log_softmax_rows(logits), yb)));
    tape.backward(nll);
    opt.step(params);
  }

  json report = run_header(config);
  report["m"] = m;
  report["selected_dims"] = selected;
  report["accuracy_selection"] = accuracy_of(classifier, test_sub,
                                             test.labels);
  report["accuracy_db_deterministic"] =
      ref_report.value("accuracy_deterministic", 0.0);
  report["reference_run"] = reference;
  report["knn_scores"] =
      std::vector<double>(scores.data(), scores.data() + d);
  save_report(report, config.out_dir);
  return RunResult{report};
}

namespace {

// Linear softmax probe trained on a frozen representation provider.
// `sample` yields the representation of the training features for each
// epoch (fresh masks for the stochastic probe, fixed for deterministic).
template <typename SampleFn>
nn::Mlp train_probe(const std::vector<int>& labels, int d, int classes,
                    int epochs, int batch, double lr, SampleFn sample,
                    Rng& rng) {
  nn::Mlp probe = nn::make_mlp({d, classes}, rng);
  std::vector<nn::Param*> params = nn::params_of(probe);
  nn::Adam opt(lr);
  const int n = static_cast<int>(labels.size());
  for (int e = 0; e < epochs; ++e) {
    Matrix repr = sample();
    const int batches = std::max(1, n / batch);
    for (int bi = 0; bi < batches; ++bi) {
      const std::vector<int> idx = minibatch_indices(n, batch, rng);
      Matrix xb(batch, d);
      std::vector<int> yb(batch);
      for (int r = 0; r < batch; ++r) {
        xb.row(r) = repr.row(idx[r]);
        yb[r] = labels[idx[r]];
      }
      nn::zero_grads(params);
      ad::Tape tape;
      ad::Var logits = nn::mlp_forward(tape, probe, tape.constant(xb));
      ad::Var nll = tape.neg(tape.mean_all(
          tape.pick_per_row(tape.log_softmax_rows(logits), yb)));
      tape.backward(nll);
      opt.step(params);
    }
  }
  return probe;
}

}  // namespace

RunResult run_nuisance_probe(const ExperimentConfig& config) {
  write_config_echo(config, config.out_dir);

  const int d_in = config.integer("data.input_dims", 32);
  const int block = config.integer("data.block_dims", 8);
  const double sigma = config.num("data.noise_sigma", 0.5);
  const int n_train = config.integer("data.n_train", 4096);
  const int n_test = config.integer("data.n_test", 2000);
  const int d = config.integer("model.d", 32);
  const int classes = 4;

  Rng data_rng = stream(config, kDataStream);
  NuisanceData train = make_nuisance_dataset(n_train, d_in, block, sigma,
                                             data_rng);
  NuisanceData test = make_nuisance_dataset(n_test, d_in, block, sigma,
                                            data_rng);

  std::vector<double> beta_grid = config.numbers("train.beta_grid");
  if (beta_grid.empty()) beta_grid = {config.num("train.beta", 0.01)};

  CsvWriter curve((fs::path(config.out_dir) / "nuisance_curve.csv").string(),
                  {"beta", "primary_error", "nuisance_error_stochastic",
                   "nuisance_error_deterministic", "retained"});

  const int steps = config.integer("train.steps", 1500);
  const int probe_epochs = config.integer("train.probe_epochs", 30);
  json rows = json::array();

  for (size_t bi = 0; bi < beta_grid.size(); ++bi) {
    const double beta = beta_grid[bi];

    // phase 1: extractor + drop + primary classifier
    Rng init_rng = stream(config, kInitStream);
    FeatureExtractor extractor = make_extractor(
        d_in, config.integers("model.extractor_hidden", {64}), d, init_rng);
    TrainableDrop drop = init_drop_from(config, d, init_rng);
    std::vector<int> cls_widths{d};
    for (int h : config.integers("model.classifier_hidden", {}))
      cls_widths.push_back(h);
    cls_widths.push_back(classes);
    nn::Mlp classifier = nn::make_mlp(cls_widths, init_rng);

    IBObjectiveConfig cfg = ib_config_from(config);
    std::vector<nn::Param*> params = extractor.params();
    params.push_back(&drop.logits);
    nn::append_params(params, classifier);
    nn::Adam opt(cfg.lr);
    Rng train_rng = stream(config, kTrainStream + 100 * bi);
    const int n = static_cast<int>(train.x.rows());
    const int entropy_refresh = config.integer("train.entropy_refresh", 50);
    Vector entropies = estimate_entropy_binning(
                           extractor.forward(train.x), cfg.entropy_bins)
                           .entropies;
    for (int step = 0; step < steps; ++step) {
      if (step > 0 && step % entropy_refresh == 0) {
        entropies = estimate_entropy_binning(extractor.forward(train.x),
                                             cfg.entropy_bins)
                        .entropies;
      }
      const std::vector<int> idx = minibatch_indices(n, cfg.batch_size,
                                                     train_rng);
      Matrix xb(cfg.batch_size, d_in);
      std::vector<int> yb(cfg.batch_size);
      for (int r = 0; r < cfg.batch_size; ++r) {
        xb.row(r) = train.x.row(idx[r]);
        yb[r] = train.primary[idx[r]];
      }
      nn::zero_grads(params);
      ad::Tape tape;
      SupervisedLossVars vars =
          build_supervised_loss(tape, xb, yb, extractor, drop, classifier,
                                entropies, beta, cfg, train_rng);
      tape.backward(vars.total);
      opt.step(params);
    }

    // phase 2: freeze the extractor and drop logits, probe the nuisance
    const Matrix train_features = extractor.forward(train.x);
    const Matrix test_features = extractor.forward(test.x);
    Rng probe_rng = stream(config, kProbeStream + 100 * bi);
    Rng eval_rng = stream(config, kEvalStream + 100 * bi);

    const double primary_error =
        1.0 - accuracy_of(classifier,
                          stochastic_eval_repr(test_features, drop, eval_rng),
                          test.primary);

    nn::Mlp stoch_probe = train_probe(
        train.nuisance, d, classes, probe_epochs, cfg.batch_size, cfg.lr,
        [&]() { return stochastic_eval_repr(train_features, drop, probe_rng); },
        probe_rng);
    const double nuis_err_stoch =
        1.0 - accuracy_of(stoch_probe,
                          stochastic_eval_repr(test_features, drop, eval_rng),
                          test.nuisance);

    const int retained = deterministic_kept_count(drop.probabilities());
    double nuis_err_det = 1.0 - 1.0 / classes;  // empty repr: chance level
    if (retained > 0) {
      const Matrix train_det = deterministic_repr(train_features, drop);
      const Matrix test_det = deterministic_repr(test_features, drop);
      nn::Mlp det_probe = train_probe(
          train.nuisance, d, classes, probe_epochs, cfg.batch_size, cfg.lr,
          [&]() { return train_det; }, probe_rng);
      nuis_err_det = 1.0 - accuracy_of(det_probe, test_det, test.nuisance);
    }

    curve.row({beta, primary_error, nuis_err_stoch, nuis_err_det,
               static_cast<double>(retained)});
    json row;
    row["beta"] = beta;
    row["primary_error"] = primary_error;
    row["nuisance_error_stochastic"] = nuis_err_stoch;
    row["nuisance_error_deterministic"] = nuis_err_det;
    row["retained"] = retained;
    rows.push_back(row);
  }

  json report = run_header(config);
  report["rows"] = rows;
  report["chance_error"] = 1.0 - 1.0 / classes;
  save_report(report, config.out_dir);
  return RunResult{report};
}

namespace {

GridWorldConfig env_config_from(const ExperimentConfig& config) {
  GridWorldConfig env;
  const std::string map_path = config.text("env.map", "");
  if (!map_path.empty()) env.map = load_map(map_path);
  env.procedural = config.flag("env.procedural", false);
  env.width = config.integer("env.width", 15);
  env.height = config.integer("env.height", 15);
  env.noise_mode =
      noise_mode_from_string(config.text("env.noise_mode", "original"));
  env.spawn = spawn_policy_from_string(config.text("env.spawn", "dense"));
  env.max_steps = config.integer("env.max_steps", 200);
  env.state_encoding =
      state_encoding_from_string(config.text("env.state_encoding", "one_hot"));
  env.view_radius = config.integer("env.view_radius", 2);
  env.tv_dim = config.integer("env.tv_dim", 16);
  env.d_near = config.integer("env.d_near", 4);
  env.d_far = config.integer("env.d_far", 16);
  env.pattern_seed = static_cast<std::uint64_t>(
      config.integer("env.pattern_seed", 7));
  require(!env.map.empty() || env.procedural, ErrorCode::kConfig,
          "exploration: env.map or env.procedural required");
  return env;
}

PpoConfig ppo_config_from(const ExperimentConfig& config) {
  PpoConfig cfg;
  cfg.lr = config.num("rl.ppo.lr", 2.5e-4);
  cfg.clip = config.num("rl.ppo.clip", 0.1);
  cfg.entropy_coef = config.num("rl.ppo.entropy_coef", 0.01);
  cfg.value_coef = config.num("rl.ppo.value_coef", 0.5);
  cfg.gamma = config.num("rl.ppo.gamma", 0.99);
  cfg.gae_lambda = config.num("rl.ppo.gae_lambda", 0.95);
  cfg.epochs = config.integer("rl.ppo.epochs", 4);
  cfg.minibatch = config.integer("rl.ppo.minibatch", 256);
  cfg.hidden = config.integers("rl.ppo.hidden", {64, 64});
  return cfg;
}

double eval_policy(const GridWorldConfig& env_cfg, const PolicyAgent& agent,
                   int episodes, Rng& rng, double* mean_return,
                   double* mean_length) {
  GridWorld env(env_cfg);
  int successes = 0;
  double returns = 0.0;
  double lengths = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Vector obs = env.reset(rng);
    double ep_return = 0.0;
    while (true) {
      auto res = env.step(agent.act(obs, rng), rng);
      ep_return += res.reward;
      lengths += 1.0;
      if (res.done) {
        if (res.reward > 0.0) ++successes;
        break;
      }
      obs = res.obs;
    }
    returns += ep_return;
  }
  if (mean_return) *mean_return = returns / episodes;
  if (mean_length) *mean_length = lengths / episodes;
  return static_cast<double>(successes) / episodes;
}

enum class ExplorationMethod { kPpoOnly, kPpoDb, kPpoNoDrop, kPpoVib };

ExplorationMethod method_from_string(const std::string& s) {
  if (s == "ppo_only") return ExplorationMethod::kPpoOnly;
  if (s == "ppo_db") return ExplorationMethod::kPpoDb;
  if (s == "ppo_nodrop") return ExplorationMethod::kPpoNoDrop;
  if (s == "ppo_vib") return ExplorationMethod::kPpoVib;
  throw_error(ErrorCode::kConfig, "unknown exploration method: " + s);
}

// Per-round VIB objective training (the PPO+VIB ablation).
void train_vib_round(VibLayer& layer, Discriminator& disc,
                     const PairedBatch& buffer, double beta, int n_dup,
                     int epochs, int batch_size, double lr,
                     int disc_extra_epochs, Rng& rng) {
  std::vector<nn::Param*> joint = nn::params_of(layer.encoder);
  nn::append_params(joint, disc.net);
  std::vector<nn::Param*> disc_params = nn::params_of(disc.net);
  nn::Adam opt(lr);
  const int n = static_cast<int>(buffer.x.rows());
  for (int e = 0; e < epochs; ++e) {
    std::vector<int> order = random_permutation(n, rng);
    for (int start = 0; start + batch_size <= n; start += batch_size) {
      PairedBatch mini;
      mini.x = Matrix(batch_size, buffer.x.cols());
      mini.y_source = Matrix(batch_size, buffer.y_source.cols());
      for (int r = 0; r < batch_size; ++r) {
        mini.x.row(r) = buffer.x.row(order[start + r]);
        mini.y_source.row(r) = buffer.y_source.row(order[start + r]);
      }
      nn::zero_grads(joint);
      {
        ad::Tape tape;
        VibLossVars vars = build_vib_exploration_loss(tape, mini, layer, disc,
                                                      beta, n_dup, rng);
        tape.backward(vars.total);
      }
      opt.step(joint);
      for (int extra = 0; extra < disc_extra_epochs; ++extra) {
        nn::zero_grads(disc_params);
        ad::Tape tape;
        VibLossVars vars = build_vib_exploration_loss(tape, mini, layer, disc,
                                                      beta, n_dup, rng);
        tape.backward(vars.total);
        opt.step(disc_params);
      }
    }
  }
}

}  // namespace

RunResult run_exploration(const ExperimentConfig& config) {
  write_config_echo(config, config.out_dir);
  const GridWorldConfig env_cfg = env_config_from(config);
  const PpoConfig ppo_cfg = ppo_config_from(config);

  const int total_steps = config.integer("rl.total_steps", 120000);
  const int horizon = config.integer("rl.horizon", 2048);
  const int eval_interval = config.integer("rl.eval_interval", 8192);
  const int eval_episodes = config.integer("rl.eval_episodes", 20);
  const double task_scale = config.num("rl.task_reward_scale", 5.0);
  const double intrinsic_scale = config.num("rl.intrinsic_scale", 0.005);
  const int ib_epochs = config.integer("rl.ib_epochs", 2);
  const int d = config.integer("model.d", 32);

  std::vector<std::string> methods = config.texts("rl.methods");
  if (methods.empty()) methods = {"ppo_db", "ppo_only", "ppo_nodrop"};

  json report = run_header(config);
  json per_method = json::object();

  for (size_t mi = 0; mi < methods.size(); ++mi) {
    const std::string& method_name = methods[mi];
    const ExplorationMethod method = method_from_string(method_name);
    const std::string method_dir =
        (fs::path(config.out_dir) / method_name).string();
    fs::create_directories(method_dir);

    // independent streams per method so runs do not interact
    Rng method_root = stream(config, kEnvStream + 1000 * mi);
    Rng env_rng = method_root.split(1);
    Rng init_rng = method_root.split(2);
    Rng policy_rng = method_root.split(3);
    Rng ib_rng = method_root.split(4);
    Rng eval_rng = method_root.split(5);

    GridWorld env(env_cfg);
    const int obs_dim = env.obs_dim();
    PolicyAgent agent =
        make_policy_agent(obs_dim, env.num_actions(), ppo_cfg, init_rng);

    // embedding machinery (unused by ppo_only)
    FeatureExtractor extractor = make_extractor(
        obs_dim, config.integers("model.extractor_hidden", {128, 128}), d,
        init_rng);
    TrainableDrop drop = init_drop_from(config, d, init_rng);
    Discriminator disc = make_discriminator(
        d, d, init_rng, config.integers("model.disc_hidden", {64, 32, 16}));
    VibLayer vib = make_vib_layer(
        obs_dim, config.integers("model.extractor_hidden", {128, 128}), d,
        init_rng);
    if (method == ExplorationMethod::kPpoNoDrop) {
      drop.logits.value.setConstant(-40.0);  // keep everything, b = 1
    }

    IBObjectiveConfig ib_cfg = ib_config_from(config);
    ib_cfg.epochs = ib_epochs;
    if (method == ExplorationMethod::kPpoNoDrop) {
      ib_cfg.beta = 0.0;
      ib_cfg.train_logits = false;
    }
    const double vib_beta = config.num("train.vib_beta", 0.0005 / 128.0);

    DropParams drop_snapshot = drop.snapshot();
    EmbeddingSnapshot snapshot;
    snapshot.extractor = &extractor;
    snapshot.drop = &drop_snapshot;
    snapshot.disc = &disc;
    snapshot.use_drop = method == ExplorationMethod::kPpoDb;

    // VIB embeds with the encoder mean; reuse the snapshot hook by
    // swapping the extractor for the mean head at scoring time
    FeatureExtractor vib_mean_extractor;  // filled lazily per round

    CsvWriter curves((fs::path(method_dir) / "curves.csv").string(),
                     {"step", "success_rate", "mean_return", "mean_length",
                      "mean_p", "retained", "prediction_mi"});
    CsvWriter episodes_csv((fs::path(method_dir) / "episodes.csv").string(),
                           {"episode", "task_return", "intrinsic_sum",
                            "length", "success"});

    RolloutState state;
    RewardNormalizer normalizer;
    int steps_done = 0;
    int next_eval = eval_interval;
    double last_mi = 0.0;
    const bool uses_intrinsic = method != ExplorationMethod::kPpoOnly;

    auto refresh_vib_extractor = [&]() {
      // mean head = encoder with the logvar columns sliced away
      nn::Mlp mean_net = vib.encoder;
      nn::Linear& out = mean_net.layers.back();
      out.weight.value = out.weight.value.leftCols(d).eval();
      out.bias.value = out.bias.value.leftCols(d).eval();
      vib_mean_extractor.net = std::move(mean_net);
      vib_mean_extractor.dim_out = d;
    };
    if (method == ExplorationMethod::kPpoVib) {
      refresh_vib_extractor();
      snapshot.extractor = &vib_mean_extractor;
      snapshot.use_drop = false;
    }

    while (steps_done < total_steps) {
      const int window = std::min(horizon, total_steps - steps_done);
      drop_snapshot = drop.snapshot();  // freeze parameters for the window
      RolloutResult result = rollout(env, agent, snapshot, window, env_rng,
                                     state, uses_intrinsic);

      std::vector<double> rewards(result.transitions.size());
      for (size_t i = 0; i < result.transitions.size(); ++i) {
        const double intr =
            uses_intrinsic ? normalizer.normalize(result.intrinsic[i]) : 0.0;
        rewards[i] = combined_reward(result.transitions[i].task_reward, intr,
                                     uses_intrinsic ? intrinsic_scale : 0.0,
                                     task_scale);
      }
      for (const auto& ep : result.episodes) {
        episodes_csv.row({static_cast<double>(ep.index), ep.task_return,
                          ep.intrinsic_sum, static_cast<double>(ep.length),
                          ep.success ? 1.0 : 0.0});
      }

      ppo_update(agent, result.transitions, rewards, policy_rng);

      if (uses_intrinsic) {
        PairedBatch buffer;
        buffer.x = Matrix(result.transitions.size(), obs_dim);
        buffer.y_source = Matrix(result.transitions.size(), obs_dim);
        for (size_t i = 0; i < result.transitions.size(); ++i) {
          buffer.x.row(i) = result.transitions[i].next_state.transpose();
          buffer.y_source.row(i) = result.transitions[i].state.transpose();
        }
        if (method == ExplorationMethod::kPpoVib) {
          train_vib_round(vib, disc, buffer, vib_beta, ib_cfg.n_dup,
                          ib_cfg.epochs, ib_cfg.batch_size, ib_cfg.lr,
                          ib_cfg.disc_extra_epochs, ib_rng);
          refresh_vib_extractor();
        } else {
          DbModel model{std::move(extractor), std::move(drop),
                        std::move(disc)};
          auto trace = train_db(model, buffer, ib_cfg, ib_rng);
          extractor = std::move(model.extractor);
          drop = std::move(model.drop);
          disc = std::move(model.disc);
          if (!trace.empty()) last_mi = trace.back().prediction_mi;
        }
      }

      steps_done += window;
      if (steps_done >= next_eval || steps_done >= total_steps) {
        double mean_return = 0.0, mean_length = 0.0;
        const double success =
            eval_policy(env_cfg, agent, eval_episodes, eval_rng, &mean_return,
                        &mean_length);
        const Vector p = drop.probabilities();
        curves.row({static_cast<double>(steps_done), success, mean_return,
                    mean_length, p.mean(),
                    static_cast<double>(deterministic_kept_count(p)),
                    last_mi});
        next_eval += eval_interval;
      }
    }

    double final_return = 0.0, final_length = 0.0;
    const double final_success =
        eval_policy(env_cfg, agent, eval_episodes, eval_rng, &final_return,
                    &final_length);
    json method_report;
    method_report["success_rate"] = final_success;
    method_report["mean_return"] = final_return;
    method_report["mean_length"] = final_length;
    per_method[method_name] = method_report;

    Checkpoint ckpt;
    ckpt.add_mlp("policy", agent.policy);
    ckpt.add_mlp("value", agent.value);
    if (method == ExplorationMethod::kPpoVib) {
      ckpt.add_mlp("vib.encoder", vib.encoder);
    } else if (method != ExplorationMethod::kPpoOnly) {
      if (extractor.net) ckpt.add_mlp("extractor", *extractor.net);
      ckpt.add_param("drop.logits", drop.logits);
      ckpt.add_scalar("drop.temperature", drop.temperature);
    }
    ckpt.add_mlp("disc", disc.net);
    ckpt.save((fs::path(method_dir) / "checkpoint").string());
  }

  report["methods"] = per_method;
  save_report(report, config.out_dir);
  return RunResult{report};
}

RunResult run_sweep(const ExperimentConfig& config) {
  require(config.kind == "supervised", ErrorCode::kConfig,
          "sweep: only the supervised experiment sweeps over beta "
          "(nuisance_probe runs its grid in a single train run)");
  std::vector<double> grid = config.numbers("train.beta_grid");
  require(!grid.empty(), ErrorCode::kConfig,
          "sweep: train.beta_grid is required");
  write_config_echo(config, config.out_dir);

  CsvWriter curve((fs::path(config.out_dir) / "dimred_curve.csv").string(),
                  {"beta", "accuracy_stochastic", "accuracy_deterministic",
                   "retained", "accuracy_selection"});
  json rows = json::array();
  for (size_t i = 0; i < grid.size(); ++i) {
    ExperimentConfig sub = config;
    sub.root["train"]["beta"] = grid[i];
    sub.out_dir =
        (fs::path(config.out_dir) / ("beta_" + std::to_string(i))).string();
    sub.root["output"]["dir"] = sub.out_dir;
    RunResult db_run = run_supervised(sub);

    json row = db_run.report;
    double acc_fs = 0.0;
    if (db_run.report.value("retained", 0) >= 1) {
      ExperimentConfig fs_cfg = sub;
      fs_cfg.kind = "feature_selection";
      fs_cfg.root["experiment"]["kind"] = "feature_selection";
      fs_cfg.root["experiment"]["reference_run"] = sub.out_dir;
      fs_cfg.out_dir = (fs::path(config.out_dir) /
                        ("beta_" + std::to_string(i) + "_selection"))
                           .string();
      fs_cfg.root["output"]["dir"] = fs_cfg.out_dir;
      RunResult fs_run = run_feature_selection_baseline(fs_cfg);
      acc_fs = fs_run.report.value("accuracy_selection", 0.0);
      row["accuracy_selection"] = acc_fs;
    }
    curve.row({grid[i], db_run.report.value("accuracy_stochastic", 0.0),
               db_run.report.value("accuracy_deterministic", 0.0),
               static_cast<double>(db_run.report.value("retained", 0)),
               acc_fs});
    rows.push_back(row);
  }
  json report = run_header(config);
  report["rows"] = rows;
  save_report(report, config.out_dir);
  return RunResult{report};
}

RunResult evaluate_run(const std::string& run_dir, std::uint64_t seed) {
  ExperimentConfig config = load_config_echo(run_dir);
  if (seed != 0) config.seed = seed;
  json eval = json::object();
  eval["kind"] = config.kind;
  eval["run_dir"] = run_dir;

  if (config.kind == "exploration") {
    const GridWorldConfig env_cfg = env_config_from(config);
    const PpoConfig ppo_cfg = ppo_config_from(config);
    const int eval_episodes = config.integer("rl.eval_episodes", 20);
    json methods = json::object();
    for (const auto& entry : fs::directory_iterator(run_dir)) {
      if (!entry.is_directory()) continue;
      const std::string ckpt_dir = (entry.path() / "checkpoint").string();
      if (!fs::exists(fs::path(ckpt_dir) / "manifest.json")) continue;
      Checkpoint ckpt = Checkpoint::load(ckpt_dir);
      GridWorld probe_env(env_cfg);
      Rng init(1);
      PolicyAgent agent = make_policy_agent(probe_env.obs_dim(),
                                            probe_env.num_actions(), ppo_cfg,
                                            init);
      ckpt.read_mlp("policy", agent.policy);
      ckpt.read_mlp("value", agent.value);
      Rng eval_rng(config.seed == 0 ? 1 : config.seed);
      double mean_return = 0.0, mean_length = 0.0;
      const double success = eval_policy(env_cfg, agent, eval_episodes,
                                         eval_rng, &mean_return, &mean_length);
      json m;
      m["success_rate"] = success;
      m["mean_return"] = mean_return;
      m["mean_length"] = mean_length;
      methods[entry.path().filename().string()] = m;
    }
    eval["methods"] = methods;
  } else if (config.kind == "supervised") {
    LabeledData test = parity_train_split(config, true);
    Checkpoint ckpt =
        Checkpoint::load((fs::path(run_dir) / "checkpoint").string());
    const int d = config.integer("model.d", 32);
    TrainableDrop drop;
    drop.temperature = ckpt.scalar("drop.temperature");
    ckpt.read_param("drop.logits", drop.logits);
    const int classes = 4;
    Rng init(1);
    std::vector<int> widths{d};
    for (int h : config.integers("model.classifier_hidden", {64}))
      widths.push_back(h);
    widths.push_back(classes);
    nn::Mlp classifier = nn::make_mlp(widths, init);
    ckpt.read_mlp("classifier", classifier);
    Rng eval_rng(config.seed);
    eval["accuracy_stochastic"] = accuracy_of(
        classifier, stochastic_eval_repr(test.x, drop, eval_rng),
        test.labels);
    const int retained = deterministic_kept_count(drop.probabilities());
    eval["retained"] = retained;
    if (retained > 0) {
      eval["accuracy_deterministic"] = accuracy_of(
          classifier, deterministic_repr(test.x, drop), test.labels);
    }
  } else {
    // other kinds evaluate at train time; replay the stored report
    eval["report"] = load_report(run_dir);
  }

  std::ofstream out(fs::path(run_dir) / "eval.json");
  require(out.good(), ErrorCode::kIo, "cannot write eval.json");
  out << eval.dump(2) << "\n";
  return RunResult{eval};
}

void emit_plots(const std::string& run_dir) {
  require(fs::exists(run_dir), ErrorCode::kIo,
          "run directory does not exist: " + run_dir);
  const std::string plot_dir = (fs::path(run_dir) / "plots").string();
  bool any = false;

  auto series_from = [](const CsvTable& table, int xcol, int ycol,
                        const std::string& label) {
    Series s;
    s.label = label;
    for (const auto& row : table.rows) {
      s.x.push_back(std::stod(row[xcol]));
      s.y.push_back(std::stod(row[ycol]));
    }
    return s;
  };

  const std::string metrics_path =
      (fs::path(run_dir) / "metrics.csv").string();
  if (fs::exists(metrics_path)) {
    CsvTable t = read_csv(metrics_path);
    const int step = t.column("step");
    std::vector<Series> losses;
    for (const char* col : {"total", "prediction_mi", "compression"}) {
      const int c = t.column(col);
      if (c >= 0) losses.push_back(series_from(t, step, c, col));
    }
    if (!losses.empty())
      write_line_chart((fs::path(plot_dir) / "loss_curves.svg").string(),
                       "training objective", "step", "value", losses);
    if (t.column("mean_p_relevant") >= 0) {
      write_line_chart(
          (fs::path(plot_dir) / "p_separation.svg").string(),
          "drop probability by group", "step", "mean p",
          {series_from(t, step, t.column("mean_p_relevant"), "relevant"),
           series_from(t, step, t.column("mean_p_noise"), "noise")});
    }
    any = true;
  }

  const std::string hist_path = (fs::path(run_dir) / "p_hist.csv").string();
  if (fs::exists(hist_path)) {
    CsvTable t = read_csv(hist_path);
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    // at most 12 ridgeline rows, evenly subsampled, latest last
    const size_t stride = std::max<size_t>(1, t.rows.size() / 12);
    for (size_t i = 0; i < t.rows.size(); i += stride) {
      std::vector<double> hist;
      for (size_t c = 1; c < t.rows[i].size(); ++c)
        hist.push_back(std::stod(t.rows[i][c]));
      rows.push_back(hist);
      labels.push_back("step " + t.rows[i][0]);
    }
    write_ridgeline((fs::path(plot_dir) / "p_ridgeline.svg").string(),
                    "drop probability distribution", rows, labels);
    any = true;
  }

  const std::string nuisance_path =
      (fs::path(run_dir) / "nuisance_curve.csv").string();
  if (fs::exists(nuisance_path)) {
    CsvTable t = read_csv(nuisance_path);
    const int beta = t.column("beta");
    write_line_chart(
        (fs::path(plot_dir) / "nuisance_vs_beta.svg").string(),
        "probe error vs beta", "beta", "error",
        {series_from(t, beta, t.column("primary_error"), "primary"),
         series_from(t, beta, t.column("nuisance_error_stochastic"),
                     "nuisance"),
         series_from(t, beta, t.column("nuisance_error_deterministic"),
                     "nuisance (determ.)")});
    any = true;
  }

  const std::string dimred_path =
      (fs::path(run_dir) / "dimred_curve.csv").string();
  if (fs::exists(dimred_path)) {
    CsvTable t = read_csv(dimred_path);
    const int beta = t.column("beta");
    write_line_chart(
        (fs::path(plot_dir) / "accuracy_vs_beta.svg").string(),
        "accuracy vs beta", "beta", "accuracy",
        {series_from(t, beta, t.column("accuracy_stochastic"), "DB"),
         series_from(t, beta, t.column("accuracy_deterministic"),
                     "DB (determ.)"),
         series_from(t, beta, t.column("accuracy_selection"),
                     "MI selection")});
    write_line_chart(
        (fs::path(plot_dir) / "retained_vs_beta.svg").string(),
        "retained dimensions vs beta", "beta", "retained",
        {series_from(t, beta, t.column("retained"), "DB (determ.)")});
    any = true;
  }

  // exploration runs keep per-method curves in subdirectories
  std::vector<Series> success_series;
  std::vector<Series> return_series;
  if (fs::exists(run_dir)) {
    for (const auto& entry : fs::directory_iterator(run_dir)) {
      if (!entry.is_directory()) continue;
      const std::string curves_path = (entry.path() / "curves.csv").string();
      if (!fs::exists(curves_path)) continue;
      CsvTable t = read_csv(curves_path);
      const int step = t.column("step");
      success_series.push_back(series_from(
          t, step, t.column("success_rate"), entry.path().filename()));
      return_series.push_back(series_from(
          t, step, t.column("mean_return"), entry.path().filename()));
    }
  }
  if (!success_series.empty()) {
    write_line_chart((fs::path(plot_dir) / "success_curves.svg").string(),
                     "evaluation success rate", "env step", "success rate",
                     success_series);
    write_line_chart((fs::path(plot_dir) / "return_curves.svg").string(),
                     "evaluation return", "env step", "mean return",
                     return_series);
    any = true;
  }

  require(any, ErrorCode::kIo,
          "no known metrics CSVs found in " + run_dir);
}

RunResult run_experiment(const ExperimentConfig& config) {
  require(!config.out_dir.empty(), ErrorCode::kConfig,
          "output.dir is required");
  if (config.kind == "feature_identification")
    return run_feature_identification(config);
  if (config.kind == "supervised") return run_supervised(config);
  if (config.kind == "feature_selection")
    return run_feature_selection_baseline(config);
  if (config.kind == "nuisance_probe") return run_nuisance_probe(config);
  if (config.kind == "exploration") return run_exploration(config);
  throw_error(ErrorCode::kConfig, "unknown experiment kind: " + config.kind);
}

}  // namespace dropbn
