#include "dropbn/rl.hpp"

#include <algorithm>
#include <cmath>

#include "dropbn/errors.hpp"

namespace dropbn {

void EpisodicMemory::append(const Vector& embedding) {
  if (rows_ == data_.rows()) {
    const Eigen::Index grown = std::max<Eigen::Index>(16, data_.rows() * 2);
    Matrix bigger(grown, embedding.size());
    if (rows_ > 0) bigger.topRows(rows_) = data_.topRows(rows_);
    data_ = std::move(bigger);
  }
  require(data_.cols() == embedding.size(), ErrorCode::kDimensionMismatch,
          "episodic memory: embedding width changed mid-episode");
  data_.row(rows_) = embedding.transpose();
  ++rows_;
}

Vector EmbeddingSnapshot::embed(const Vector& obs) const {
  Matrix features = extractor->forward(obs.transpose());
  if (!use_drop) return features.row(0).transpose();
  CompressedBatch compressed = compress_deterministic(features, *drop);
  return compressed.values.row(0).transpose();
}

double intrinsic_reward(const Vector& obs, const EpisodicMemory& memory,
                        const EmbeddingSnapshot& model, double r_max) {
  if (memory.size() == 0) return r_max;
  const Vector z = model.embed(obs);
  const Matrix past = memory.as_matrix();
  Matrix z_rep = z.transpose().replicate(memory.size(), 1);
  // g(s_t, s_j): how unlikely s_t is as the next state of s_j, and the
  // reverse direction
  Matrix forward_scores = discriminator_scores(*model.disc, z_rep, past);
  Matrix backward_scores = discriminator_scores(*model.disc, past, z_rep);
  double total = 0.0;
  for (int j = 0; j < memory.size(); ++j) {
    total += ad::softplus_value(-forward_scores(j, 0)) +
             ad::softplus_value(-backward_scores(j, 0));
  }
  return total / static_cast<double>(memory.size());
}

void memory_append(EpisodicMemory& memory, const Vector& obs,
                   const EmbeddingSnapshot& model) {
  memory.append(model.embed(obs));
}

double RewardNormalizer::variance() const {
  if (count_ < 2) return 1.0;  // initialization contract
  return m2_ / static_cast<double>(count_ - 1);
}

void RewardNormalizer::update(double r) {
  count_ += 1;
  const double delta = r - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (r - mean_);
}

double RewardNormalizer::normalize(double r) {
  const double out = (r - mean_) / std::sqrt(variance() + 1e-8);
  update(r);
  return out;
}

void RewardNormalizer::merge(const RewardNormalizer& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * nb / (na + nb);
  m2_ += other.m2_ + delta * delta * na * nb / (na + nb);
  count_ += other.count_;
}

double combined_reward(double task_reward, double intrinsic_normalized,
                       double intrinsic_scale, double task_scale) {
  require(intrinsic_scale >= 0.0, ErrorCode::kInvalidArgument,
          "combined_reward: intrinsic scale must be nonnegative");
  return task_scale * task_reward + intrinsic_scale * intrinsic_normalized;
}

PolicyAgent make_policy_agent(int obs_dim, int n_actions, const PpoConfig& cfg,
                              Rng& rng) {
  PolicyAgent agent;
  agent.cfg = cfg;
  agent.n_actions = n_actions;
  std::vector<int> pw{obs_dim};
  pw.insert(pw.end(), cfg.hidden.begin(), cfg.hidden.end());
  pw.push_back(n_actions);
  agent.policy = nn::make_mlp(pw, rng, nn::Activation::kTanh);
  std::vector<int> vw{obs_dim};
  vw.insert(vw.end(), cfg.hidden.begin(), cfg.hidden.end());
  vw.push_back(1);
  agent.value = nn::make_mlp(vw, rng, nn::Activation::kTanh);
  return agent;
}

Vector PolicyAgent::action_probabilities(const Vector& obs) const {
  Matrix logits = nn::mlp_forward_value(policy, obs.transpose());
  const double mx = logits.row(0).maxCoeff();
  Vector probs = (logits.row(0).array() - mx).exp().transpose();
  probs /= probs.sum();
  return probs;
}

int PolicyAgent::act(const Vector& obs, Rng& rng) const {
  const Vector probs = action_probabilities(obs);
  double u = rng.uniform();
  for (int a = 0; a < n_actions; ++a) {
    u -= probs(a);
    if (u < 0.0) return a;
  }
  return n_actions - 1;
}

double PolicyAgent::state_value(const Vector& obs) const {
  return nn::mlp_forward_value(value, obs.transpose())(0, 0);
}

std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values,
                                   const std::vector<bool>& dones,
                                   double bootstrap, double gamma,
                                   double lambda) {
  const size_t n = rewards.size();
  require(values.size() == n && dones.size() == n, ErrorCode::kDimensionMismatch,
          "gae_advantages: input lengths differ");
  std::vector<double> advantages(n, 0.0);
  double running = 0.0;
  for (size_t i = n; i-- > 0;) {
    const double next_value =
        dones[i] ? 0.0 : (i + 1 < n ? values[i + 1] : bootstrap);
    const double not_done = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value - values[i];
    running = delta + gamma * lambda * not_done * running;
    advantages[i] = running;
  }
  return advantages;
}

PpoLosses ppo_update(PolicyAgent& agent,
                     const std::vector<Transition>& transitions,
                     const std::vector<double>& rewards, Rng& rng) {
  const int n = static_cast<int>(transitions.size());
  require(n >= 1, ErrorCode::kInvalidArgument, "ppo_update: empty batch");
  require(rewards.size() == transitions.size(), ErrorCode::kDimensionMismatch,
          "ppo_update: reward count mismatch");

  const int obs_dim = static_cast<int>(transitions[0].state.size());
  Matrix states(n, obs_dim);
  std::vector<int> actions(n);
  std::vector<bool> dones(n);
  for (int i = 0; i < n; ++i) {
    states.row(i) = transitions[i].state.transpose();
    actions[i] = transitions[i].action;
    dones[i] = transitions[i].done;
  }

  // old policy statistics, taken before any update
  Matrix old_logits = nn::mlp_forward_value(agent.policy, states);
  std::vector<double> old_logp(n);
  for (int i = 0; i < n; ++i) {
    const double mx = old_logits.row(i).maxCoeff();
    const double lse =
        std::log((old_logits.row(i).array() - mx).exp().sum()) + mx;
    old_logp[i] = old_logits(i, actions[i]) - lse;
  }
  std::vector<double> values(n);
  Matrix value_out = nn::mlp_forward_value(agent.value, states);
  for (int i = 0; i < n; ++i) values[i] = value_out(i, 0);
  const double bootstrap =
      transitions[n - 1].done
          ? 0.0
          : agent.state_value(transitions[n - 1].next_state);

  std::vector<double> advantages =
      gae_advantages(rewards, values, dones, bootstrap, agent.cfg.gamma,
                     agent.cfg.gae_lambda);
  std::vector<double> returns(n);
  for (int i = 0; i < n; ++i) returns[i] = advantages[i] + values[i];

  double adv_mean = 0.0, adv_sq = 0.0;
  for (double a : advantages) {
    adv_mean += a;
    adv_sq += a * a;
  }
  adv_mean /= n;
  const double adv_std =
      std::sqrt(std::max(adv_sq / n - adv_mean * adv_mean, 0.0));
  for (double& a : advantages) a = (a - adv_mean) / (adv_std + 1e-8);

  std::vector<nn::Param*> params = nn::params_of(agent.policy);
  nn::append_params(params, agent.value);
  nn::Adam optimizer(agent.cfg.lr);

  PpoLosses last{};
  const int minibatch = std::min(agent.cfg.minibatch, n);
  for (int epoch = 0; epoch < agent.cfg.epochs; ++epoch) {
    std::vector<int> order = random_permutation(n, rng);
    for (int start = 0; start + minibatch <= n; start += minibatch) {
      const int m = minibatch;
      Matrix mb_states(m, obs_dim);
      std::vector<int> mb_actions(m);
      Matrix mb_old_logp(m, 1);
      Matrix mb_adv(m, 1);
      Matrix mb_ret(m, 1);
      for (int r = 0; r < m; ++r) {
        const int src = order[start + r];
        mb_states.row(r) = states.row(src);
        mb_actions[r] = actions[src];
        mb_old_logp(r, 0) = old_logp[src];
        mb_adv(r, 0) = advantages[src];
        mb_ret(r, 0) = returns[src];
      }

      nn::zero_grads(params);
      ad::Tape tape;
      ad::Var obs_in = tape.constant(mb_states);
      ad::Var logits = nn::mlp_forward(tape, agent.policy, obs_in);
      ad::Var logp_all = tape.log_softmax_rows(logits);
      ad::Var logp = tape.pick_per_row(logp_all, mb_actions);
      ad::Var ratio =
          tape.exp_(tape.sub(logp, tape.constant(mb_old_logp)));
      ad::Var adv = tape.constant(mb_adv);
      ad::Var surr1 = tape.mul(ratio, adv);
      ad::Var surr2 = tape.mul(
          tape.clamp(ratio, 1.0 - agent.cfg.clip, 1.0 + agent.cfg.clip), adv);
      ad::Var policy_loss = tape.neg(tape.mean_all(tape.min2(surr1, surr2)));

      ad::Var value_pred = nn::mlp_forward(tape, agent.value, obs_in);
      ad::Var value_loss = tape.mean_all(
          tape.square(tape.sub(value_pred, tape.constant(mb_ret))));

      ad::Var entropy = tape.neg(tape.mean_all(
          tape.sum_rows(tape.mul(tape.exp_(logp_all), logp_all))));

      ad::Var total = tape.add(
          tape.sub(policy_loss,
                   tape.mul_scalar(entropy, agent.cfg.entropy_coef)),
          tape.mul_scalar(value_loss, agent.cfg.value_coef));
      tape.backward(total);
      optimizer.step(params);

      last.policy = tape.value(policy_loss)(0, 0);
      last.value = tape.value(value_loss)(0, 0);
      last.entropy = tape.value(entropy)(0, 0);
    }
  }
  return last;
}

RolloutResult rollout(GridWorld& env, const PolicyAgent& agent,
                      const EmbeddingSnapshot& model, int steps, Rng& rng,
                      RolloutState& state, bool compute_intrinsic) {
  require(steps >= 0, ErrorCode::kInvalidArgument,
          "rollout: negative step count");
  RolloutResult result;
  result.transitions.reserve(steps);
  result.intrinsic.reserve(steps);

  if (!state.started) {
    state.obs = env.reset(rng);
    state.memory.clear();
    if (compute_intrinsic) memory_append(state.memory, state.obs, model);
    state.task_return = 0.0;
    state.intrinsic_sum = 0.0;
    state.length = 0;
    state.started = true;
  }

  for (int t = 0; t < steps; ++t) {
    const int action = agent.act(state.obs, rng);
    GridWorld::StepResult sr = env.step(action, rng);

    double r_int = 0.0;
    if (compute_intrinsic) {
      r_int = intrinsic_reward(sr.obs, state.memory, model);
      memory_append(state.memory, sr.obs, model);
    }

    Transition tr;
    tr.state = state.obs;
    tr.action = action;
    tr.task_reward = sr.reward;
    tr.next_state = sr.obs;
    tr.done = sr.done;
    result.transitions.push_back(std::move(tr));
    result.intrinsic.push_back(r_int);

    state.task_return += sr.reward;
    state.intrinsic_sum += r_int;
    state.length += 1;

    if (sr.done) {
      EpisodeStat stat;
      stat.index = state.episode_index++;
      stat.task_return = state.task_return;
      stat.intrinsic_sum = state.intrinsic_sum;
      stat.length = state.length;
      stat.success = sr.reward > 0.0;
      result.episodes.push_back(stat);

      state.obs = env.reset(rng);
      state.memory.clear();
      if (compute_intrinsic) memory_append(state.memory, state.obs, model);
      state.task_return = 0.0;
      state.intrinsic_sum = 0.0;
      state.length = 0;
    } else {
      state.obs = sr.obs;
    }
  }
  return result;
}

}  // namespace dropbn
