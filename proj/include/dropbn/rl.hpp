#ifndef DROPBN_RL_HPP_
#define DROPBN_RL_HPP_

#include <Eigen/Dense>
#include <numbers>
#include <vector>

#include "dropbn/core.hpp"
#include "dropbn/env.hpp"
#include "dropbn/mi.hpp"
#include "dropbn/nn.hpp"
#include "dropbn/train.hpp"

namespace dropbn {

struct Transition {
  Vector state;
  int action = 0;
  double task_reward = 0.0;
  Vector next_state;
  bool done = false;
};

// Per-episode store of deterministic compressed embeddings. Cleared at
// every episode boundary; no pair of states from different episodes is
// ever scored together.
class EpisodicMemory {
 public:
  void clear() { rows_ = 0; }
  void append(const Vector& embedding);
  int size() const { return rows_; }
  const Vector row(int i) const { return data_.row(i).transpose(); }
  Matrix as_matrix() const { return data_.topRows(rows_); }

 private:
  Matrix data_;  // grown geometrically; first rows_ rows are valid
  int rows_ = 0;
};

// Frozen (extractor, drop, discriminator) snapshot used while collecting.
// With use_drop=false the raw features stand in for the compressed ones
// (the no-drop ablation).
struct EmbeddingSnapshot {
  const FeatureExtractor* extractor = nullptr;
  const DropParams* drop = nullptr;
  const Discriminator* disc = nullptr;
  bool use_drop = true;

  Vector embed(const Vector& obs) const;
};

constexpr double kIntrinsicRewardMax = 2.0 * std::numbers::ln2;

// Eq.-13-style novelty score of `obs` against the episode memory:
// mean over memory entries of softplus(-T(z_t, z_j)) + softplus(-T(z_j, z_t)).
// Empty memory returns r_max (the untrained-discriminator level).
double intrinsic_reward(const Vector& obs, const EpisodicMemory& memory,
                        const EmbeddingSnapshot& model,
                        double r_max = kIntrinsicRewardMax);

void memory_append(EpisodicMemory& memory, const Vector& obs,
                   const EmbeddingSnapshot& model);

// Running-stat reward normalizer (Welford). normalize(r) divides by the
// statistics of the rewards seen so far, excluding r itself, then folds r
// in; the initialized stats are mean 0, variance 1.
class RewardNormalizer {
 public:
  double normalize(double r);
  void update(double r);
  void merge(const RewardNormalizer& other);  // batch-equivalent combine
  double mean() const { return mean_; }
  double variance() const;
  long count() const { return count_; }

 private:
  double mean_ = 0.0;
  double m2_ = 0.0;
  long count_ = 0;
};

double combined_reward(double task_reward, double intrinsic_normalized,
                       double intrinsic_scale, double task_scale = 1.0);

struct PpoConfig {
  double lr = 2.5e-4;
  double clip = 0.1;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs = 4;
  int minibatch = 256;
  std::vector<int> hidden = {64, 64};
};

struct PolicyAgent {
  nn::Mlp policy;
  nn::Mlp value;
  PpoConfig cfg;
  int n_actions = 0;

  int act(const Vector& obs, Rng& rng) const;
  Vector action_probabilities(const Vector& obs) const;
  double state_value(const Vector& obs) const;
};

PolicyAgent make_policy_agent(int obs_dim, int n_actions, const PpoConfig& cfg,
                              Rng& rng);

// Generalized advantage estimation. `bootstrap` is the value of the state
// following the last transition (ignored when that transition is terminal).
std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values,
                                   const std::vector<bool>& dones,
                                   double bootstrap, double gamma,
                                   double lambda);

struct PpoLosses {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
};

// Clipped-surrogate update on `transitions` with the given per-step rewards
// (already combined/scaled). Old log-probs and values are taken from the
// agent's parameters at entry.
PpoLosses ppo_update(PolicyAgent& agent,
                     const std::vector<Transition>& transitions,
                     const std::vector<double>& rewards, Rng& rng);

struct EpisodeStat {
  int index = 0;
  double task_return = 0.0;
  double intrinsic_sum = 0.0;
  int length = 0;
  bool success = false;
};

struct RolloutResult {
  std::vector<Transition> transitions;
  std::vector<double> intrinsic;  // raw (unnormalized), aligned with transitions
  std::vector<EpisodeStat> episodes;  // episodes completed in this window
};

// Carries the episode in progress across collection windows.
struct RolloutState {
  Vector obs;
  bool started = false;
  EpisodicMemory memory;
  double task_return = 0.0;
  double intrinsic_sum = 0.0;
  int length = 0;
  int episode_index = 0;
};

// Steps `env` for `steps` actions. Each new observation is scored against
// the episodic memory before being appended; the memory is cleared when an
// episode ends. Intrinsic scoring uses the frozen `model` snapshot.
RolloutResult rollout(GridWorld& env, const PolicyAgent& agent,
                      const EmbeddingSnapshot& model, int steps, Rng& rng,
                      RolloutState& state, bool compute_intrinsic = true);

}  // namespace dropbn

#endif  // DROPBN_RL_HPP_
