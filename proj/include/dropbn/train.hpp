#ifndef DROPBN_TRAIN_HPP_
#define DROPBN_TRAIN_HPP_

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "dropbn/core.hpp"
#include "dropbn/mi.hpp"
#include "dropbn/nn.hpp"
#include "dropbn/rng.hpp"

namespace dropbn {

// Maps raw observations to d-dimensional features. With no net configured it
// is the identity, which lets drop probabilities act on raw input dimensions.
struct FeatureExtractor {
  std::optional<nn::Mlp> net;
  int dim_out = 0;

  Matrix forward(const Matrix& x) const {
    return net ? nn::mlp_forward_value(*net, x) : x;
  }
  ad::Var forward_var(ad::Tape& tape, ad::Var x) {
    return net ? nn::mlp_forward(tape, *net, x) : x;
  }
  std::vector<nn::Param*> params() {
    return net ? nn::params_of(*net) : std::vector<nn::Param*>{};
  }
};

FeatureExtractor make_extractor(int in_dim, const std::vector<int>& hidden,
                                int out_dim, Rng& rng);
FeatureExtractor identity_extractor(int dim);

struct IBObjectiveConfig {
  double beta = 0.001 / 128.0;
  int n_dup = 50;
  double temperature = 0.1;
  double lr = 1e-4;
  int batch_size = 128;
  int disc_extra_epochs = 8;
  int epochs = 1;
  bool detach_scale = false;
  bool train_logits = true;  // false: drop probabilities stay frozen
  int entropy_bins = 32;
};

struct LossBreakdown {
  double total = 0.0;
  double prediction_mi = 0.0;  // the estimate being maximized
  double compression = 0.0;    // sum_i H_i (1 - p_i)
};

// Pairs for the prediction term: rows of `x` are the compression targets
// (next states), rows of `y_source` the paired views (current states).
struct PairedBatch {
  Matrix x;
  Matrix y_source;
};

// Drop logits held as a trainable 1 x d parameter.
struct TrainableDrop {
  nn::Param logits;
  double temperature = 0.1;

  DropParams snapshot() const {
    DropParams p;
    p.logits = logits.value.row(0).transpose();
    p.temperature = temperature;
    return p;
  }
  Vector probabilities() const { return drop_probabilities(snapshot()); }
  int dim() const { return static_cast<int>(logits.value.cols()); }
};

TrainableDrop make_trainable_drop(const DropParams& init);

struct ExplorationLossVars {
  ad::Var total;
  ad::Var prediction_mi;
  ad::Var compression;
};

// Builds the exploration objective on the tape:
//   X = f(S'), Z = C_p(X), Y = C_p(f(S)),
//   loss = -I_jsd(Z; Y) + beta * sum_i H_i (1 - p_i),
// with every row duplicated n_dup times under independent relaxed masks.
// `entropies` are the binned per-dimension feature entropies, held constant.
ExplorationLossVars build_exploration_loss(ad::Tape& tape,
                                           const PairedBatch& batch,
                                           FeatureExtractor& extractor,
                                           TrainableDrop& drop,
                                           Discriminator& disc,
                                           const Vector& entropies,
                                           const IBObjectiveConfig& cfg,
                                           Rng& rng);

// Forward-only evaluation of the exploration objective.
LossBreakdown db_exploration_loss(const PairedBatch& batch,
                                  FeatureExtractor& extractor,
                                  TrainableDrop& drop, Discriminator& disc,
                                  const Vector& entropies,
                                  const IBObjectiveConfig& cfg, Rng& rng);

struct SupervisedLossVars {
  ad::Var total;
  ad::Var cross_entropy;
  ad::Var compression;
};

// Classification variant: cross-entropy of `classifier` on the relaxed
// compression of f(x), plus beta times the compression term.
SupervisedLossVars build_supervised_loss(ad::Tape& tape, const Matrix& x,
                                         const std::vector<int>& labels,
                                         FeatureExtractor& extractor,
                                         TrainableDrop& drop,
                                         nn::Mlp& classifier,
                                         const Vector& entropies, double beta,
                                         const IBObjectiveConfig& cfg,
                                         Rng& rng);

LossBreakdown db_supervised_loss(const Matrix& x,
                                 const std::vector<int>& labels,
                                 FeatureExtractor& extractor,
                                 TrainableDrop& drop, nn::Mlp& classifier,
                                 const Vector& entropies, double beta,
                                 const IBObjectiveConfig& cfg, Rng& rng);

struct TrainMetricsRow {
  long step = 0;
  double total = 0.0;
  double prediction_mi = 0.0;
  double compression = 0.0;
  double mean_p = 0.0;
};

struct DbModel {
  FeatureExtractor extractor;
  TrainableDrop drop;
  Discriminator disc;
};

// Minibatch training of (extractor, drop logits, discriminator) on the
// general objective. After every joint step the discriminator alone is
// updated disc_extra_epochs more times on the same minibatch with the
// extractor output fixed. Entropies are recomputed from the full buffer
// before each epoch sweep.
std::vector<TrainMetricsRow> train_db(DbModel& model, const PairedBatch& buffer,
                                      const IBObjectiveConfig& cfg, Rng& rng,
                                      long* step_counter = nullptr);

// ---- VIB baseline ----

struct VibLayer {
  nn::Mlp encoder;  // outputs [mean | logvar], 2 * dim columns
  int dim = 0;
};

VibLayer make_vib_layer(int in_dim, const std::vector<int>& hidden, int dim,
                        Rng& rng);

enum class VibMode { kSample, kMode };

// Sample mode: mean + exp(logvar / 2) * eps. Mode mode: the mean.
Matrix vib_forward(const VibLayer& layer, const Matrix& x, Rng& rng,
                   VibMode mode);

// KL( N(mu(x), sigma^2(x)) || N(0, I) ) in nats, mean over batch rows.
double vib_kl_term(const VibLayer& layer, const Matrix& x);

struct VibLossVars {
  ad::Var total;
  ad::Var prediction_mi;
  ad::Var kl;
};

// Exploration-style VIB objective: -I_jsd(z', z) + beta * KL, with z the
// reparameterized samples of current/next features.
VibLossVars build_vib_exploration_loss(ad::Tape& tape, const PairedBatch& batch,
                                       VibLayer& layer, Discriminator& disc,
                                       double beta, int n_dup, Rng& rng);

}  // namespace dropbn

#endif  // DROPBN_TRAIN_HPP_
