#include "dropbn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dropbn/errors.hpp"

namespace dropbn {

namespace {

Matrix duplicate_rows(const Matrix& x, int n_dup) {
  Matrix out(x.rows() * n_dup, x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out.middleRows(i * n_dup, n_dup) = x.row(i).replicate(n_dup, 1);
  return out;
}

}  // namespace

FeatureExtractor make_extractor(int in_dim, const std::vector<int>& hidden,
                                int out_dim, Rng& rng) {
  std::vector<int> widths;
  widths.push_back(in_dim);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out_dim);
  FeatureExtractor f;
  f.net = nn::make_mlp(widths, rng);
  f.dim_out = out_dim;
  return f;
}

FeatureExtractor identity_extractor(int dim) {
  FeatureExtractor f;
  f.dim_out = dim;
  return f;
}

TrainableDrop make_trainable_drop(const DropParams& init) {
  TrainableDrop drop;
  drop.logits = nn::Param(init.logits.transpose());
  drop.temperature = init.temperature;
  return drop;
}

ExplorationLossVars build_exploration_loss(ad::Tape& tape,
                                           const PairedBatch& batch,
                                           FeatureExtractor& extractor,
                                           TrainableDrop& drop,
                                           Discriminator& disc,
                                           const Vector& entropies,
                                           const IBObjectiveConfig& cfg,
                                           Rng& rng) {
  require(batch.x.rows() >= 1, ErrorCode::kInvalidArgument,
          "exploration loss: empty batch");
  require(batch.x.rows() == batch.y_source.rows(),
          ErrorCode::kDimensionMismatch,
          "exploration loss: x / y_source row mismatch");
  const int n_dup = std::max(cfg.n_dup, 1);
  const int n = static_cast<int>(batch.x.rows()) * n_dup;
  const int d = drop.dim();

  ad::Var logits = tape.param(drop.logits);
  ad::Var x_feat = extractor.forward_var(tape, tape.constant(batch.x));
  ad::Var y_feat =
      extractor.forward_var(tape, tape.constant(batch.y_source));

  // duplicate each row n_dup times, independent mask noise per copy
  ad::Var x_dup = n_dup == 1 ? x_feat : tape.repeat_rows(x_feat, n_dup);
  ad::Var y_dup = n_dup == 1 ? y_feat : tape.repeat_rows(y_feat, n_dup);

  Matrix u_z = draw_uniform(n, d, rng);
  Matrix u_y = draw_uniform(n, d, rng);
  ad::Var z = compress_relaxed_var(tape, x_dup, logits, u_z, drop.temperature,
                                   cfg.detach_scale);
  ad::Var y = compress_relaxed_var(tape, y_dup, logits, u_y, drop.temperature,
                                   cfg.detach_scale);

  ad::Var y_shuffled = tape.permute_rows(y, random_permutation(n, rng));

  ad::Var joint_scores = discriminator_scores_var(tape, disc, z, y);
  ad::Var marginal_scores =
      discriminator_scores_var(tape, disc, z, y_shuffled);
  ad::Var mi = jsd_mi_estimate_var(tape, joint_scores, marginal_scores);
  ad::Var compression = compression_term_var(tape, logits, entropies);
  ad::Var total =
      tape.add(tape.neg(mi), tape.mul_scalar(compression, cfg.beta));
  return ExplorationLossVars{total, mi, compression};
}

LossBreakdown db_exploration_loss(const PairedBatch& batch,
                                  FeatureExtractor& extractor,
                                  TrainableDrop& drop, Discriminator& disc,
                                  const Vector& entropies,
                                  const IBObjectiveConfig& cfg, Rng& rng) {
  ad::Tape tape;
  ExplorationLossVars vars = build_exploration_loss(
      tape, batch, extractor, drop, disc, entropies, cfg, rng);
  return LossBreakdown{tape.value(vars.total)(0, 0),
                       tape.value(vars.prediction_mi)(0, 0),
                       tape.value(vars.compression)(0, 0)};
}

SupervisedLossVars build_supervised_loss(ad::Tape& tape, const Matrix& x,
                                         const std::vector<int>& labels,
                                         FeatureExtractor& extractor,
                                         TrainableDrop& drop,
                                         nn::Mlp& classifier,
                                         const Vector& entropies, double beta,
                                         const IBObjectiveConfig& cfg,
                                         Rng& rng) {
  require(static_cast<Eigen::Index>(labels.size()) == x.rows(),
          ErrorCode::kDimensionMismatch,
          "supervised loss: labels must align with rows");
  const int n = static_cast<int>(x.rows());
  const int d = drop.dim();

  ad::Var logits = tape.param(drop.logits);
  ad::Var feat = extractor.forward_var(tape, tape.constant(x));
  Matrix u = draw_uniform(n, d, rng);
  ad::Var z = compress_relaxed_var(tape, feat, logits, u, drop.temperature,
                                   cfg.detach_scale);
  ad::Var log_probs =
      tape.log_softmax_rows(nn::mlp_forward(tape, classifier, z));
  ad::Var nll = tape.neg(tape.mean_all(tape.pick_per_row(log_probs, labels)));
  ad::Var compression = compression_term_var(tape, logits, entropies);
  ad::Var total = tape.add(nll, tape.mul_scalar(compression, beta));
  return SupervisedLossVars{total, nll, compression};
}

LossBreakdown db_supervised_loss(const Matrix& x,
                                 const std::vector<int>& labels,
                                 FeatureExtractor& extractor,
                                 TrainableDrop& drop, nn::Mlp& classifier,
                                 const Vector& entropies, double beta,
                                 const IBObjectiveConfig& cfg, Rng& rng) {
  ad::Tape tape;
  SupervisedLossVars vars =
      build_supervised_loss(tape, x, labels, extractor, drop, classifier,
                            entropies, beta, cfg, rng);
  return LossBreakdown{tape.value(vars.total)(0, 0),
                       tape.value(vars.cross_entropy)(0, 0),
                       tape.value(vars.compression)(0, 0)};
}

std::vector<TrainMetricsRow> train_db(DbModel& model,
                                      const PairedBatch& buffer,
                                      const IBObjectiveConfig& cfg, Rng& rng,
                                      long* step_counter) {
  const int n = static_cast<int>(buffer.x.rows());
  require(n >= 1, ErrorCode::kInvalidArgument, "train_db: empty buffer");
  require(n >= cfg.batch_size, ErrorCode::kInvalidArgument,
          "train_db: buffer smaller than batch size");

  std::vector<nn::Param*> joint_params = model.extractor.params();
  if (cfg.train_logits) joint_params.push_back(&model.drop.logits);
  nn::append_params(joint_params, model.disc.net);
  std::vector<nn::Param*> disc_params = nn::params_of(model.disc.net);

  nn::Adam optimizer(cfg.lr);
  std::vector<TrainMetricsRow> trace;
  long step = step_counter ? *step_counter : 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // entropies of the feature dimensions over the whole buffer
    const Matrix features = model.extractor.forward(buffer.x);
    const Vector entropies =
        estimate_entropy_binning(features, cfg.entropy_bins).entropies;

    std::vector<int> order = random_permutation(n, rng);
    const int batches = n / cfg.batch_size;
    for (int bi = 0; bi < batches; ++bi) {
      PairedBatch minibatch;
      minibatch.x = Matrix(cfg.batch_size, buffer.x.cols());
      minibatch.y_source = Matrix(cfg.batch_size, buffer.y_source.cols());
      for (int r = 0; r < cfg.batch_size; ++r) {
        const int src = order[bi * cfg.batch_size + r];
        minibatch.x.row(r) = buffer.x.row(src);
        minibatch.y_source.row(r) = buffer.y_source.row(src);
      }

      nn::zero_grads(joint_params);
      ad::Tape tape;
      ExplorationLossVars vars =
          build_exploration_loss(tape, minibatch, model.extractor, model.drop,
                                 model.disc, entropies, cfg, rng);
      tape.backward(vars.total);
      optimizer.step(joint_params);

      TrainMetricsRow row;
      row.step = ++step;
      row.total = tape.value(vars.total)(0, 0);
      row.prediction_mi = tape.value(vars.prediction_mi)(0, 0);
      row.compression = tape.value(vars.compression)(0, 0);
      row.mean_p = model.drop.probabilities().mean();
      trace.push_back(row);

      // extra discriminator-only epochs on the same samples; the extractor
      // and drop logits stay frozen, only new marginal pairings are drawn
      if (cfg.disc_extra_epochs > 0) {
        FeatureExtractor frozen;  // precomputed features pass through as-is
        frozen.dim_out = model.extractor.dim_out;
        PairedBatch frozen_batch;
        frozen_batch.x = model.extractor.forward(minibatch.x);
        frozen_batch.y_source = model.extractor.forward(minibatch.y_source);
        TrainableDrop frozen_drop = model.drop;
        for (int extra = 0; extra < cfg.disc_extra_epochs; ++extra) {
          nn::zero_grads(disc_params);
          frozen_drop.logits.grad.setZero();
          ad::Tape disc_tape;
          ExplorationLossVars disc_vars = build_exploration_loss(
              disc_tape, frozen_batch, frozen, frozen_drop, model.disc,
              entropies, cfg, rng);
          disc_tape.backward(disc_vars.total);
          optimizer.step(disc_params);
        }
      }
    }
  }
  if (step_counter) *step_counter = step;
  return trace;
}

VibLayer make_vib_layer(int in_dim, const std::vector<int>& hidden, int dim,
                        Rng& rng) {
  std::vector<int> widths;
  widths.push_back(in_dim);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(2 * dim);
  VibLayer layer;
  layer.encoder = nn::make_mlp(widths, rng);
  layer.dim = dim;
  return layer;
}

Matrix vib_forward(const VibLayer& layer, const Matrix& x, Rng& rng,
                   VibMode mode) {
  Matrix enc = nn::mlp_forward_value(layer.encoder, x);
  Matrix mean = enc.leftCols(layer.dim);
  if (mode == VibMode::kMode) return mean;
  Matrix logvar = enc.rightCols(layer.dim);
  Matrix out(mean.rows(), mean.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(i, j) = mean(i, j) + std::exp(0.5 * logvar(i, j)) * rng.normal();
  return out;
}

double vib_kl_term(const VibLayer& layer, const Matrix& x) {
  Matrix enc = nn::mlp_forward_value(layer.encoder, x);
  Matrix mean = enc.leftCols(layer.dim);
  Matrix logvar = enc.rightCols(layer.dim);
  double total = 0.0;
  for (Eigen::Index i = 0; i < mean.rows(); ++i) {
    for (Eigen::Index j = 0; j < mean.cols(); ++j) {
      const double var = std::exp(logvar(i, j));
      total += 0.5 * (mean(i, j) * mean(i, j) + var - logvar(i, j) - 1.0);
    }
  }
  return total / static_cast<double>(mean.rows());
}

VibLossVars build_vib_exploration_loss(ad::Tape& tape,
                                       const PairedBatch& batch,
                                       VibLayer& layer, Discriminator& disc,
                                       double beta, int n_dup, Rng& rng) {
  require(batch.x.rows() >= 1, ErrorCode::kInvalidArgument,
          "vib loss: empty batch");
  n_dup = std::max(n_dup, 1);
  const int n = static_cast<int>(batch.x.rows()) * n_dup;
  const int d = layer.dim;

  auto encode = [&](const Matrix& raw) {
    ad::Var enc = nn::mlp_forward(tape, layer.encoder, tape.constant(raw));
    ad::Var mean = tape.slice_cols(enc, 0, d);
    ad::Var logvar = tape.slice_cols(enc, d, d);
    return std::pair<ad::Var, ad::Var>(mean, logvar);
  };
  auto sample = [&](std::pair<ad::Var, ad::Var> mv) {
    const int rows = static_cast<int>(tape.value(mv.first).rows());
    Matrix eps(rows, d);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < d; ++j) eps(i, j) = rng.normal();
    ad::Var std_dev = tape.exp_(tape.mul_scalar(mv.second, 0.5));
    return tape.add(mv.first, tape.mul(std_dev, tape.constant(eps)));
  };

  Matrix x_dup = duplicate_rows(batch.x, n_dup);
  Matrix y_dup = duplicate_rows(batch.y_source, n_dup);
  auto x_mv = encode(x_dup);
  auto y_mv = encode(y_dup);
  ad::Var z = sample(x_mv);
  ad::Var y = sample(y_mv);

  ad::Var y_shuffled = tape.permute_rows(y, random_permutation(n, rng));

  ad::Var joint_scores = discriminator_scores_var(tape, disc, z, y);
  ad::Var marginal_scores =
      discriminator_scores_var(tape, disc, z, y_shuffled);
  ad::Var mi = jsd_mi_estimate_var(tape, joint_scores, marginal_scores);

  // KL for the next-state encoding (the compressed variable)
  ad::Var var_term = tape.exp_(x_mv.second);
  ad::Var kl_terms = tape.sub(
      tape.add(tape.square(x_mv.first), var_term), x_mv.second);
  ad::Var kl = tape.mul_scalar(
      tape.mean_all(tape.sum_rows(tape.add_scalar(kl_terms, -1.0))), 0.5);

  ad::Var total = tape.add(tape.neg(mi), tape.mul_scalar(kl, beta));
  return VibLossVars{total, mi, kl};
}

}  // namespace dropbn
