#ifndef DROPBN_ENV_HPP_
#define DROPBN_ENV_HPP_

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "dropbn/rng.hpp"

namespace dropbn {

using Vector = Eigen::VectorXd;

enum class NoiseMode { kOriginal, kImageAction, kNoise, kNoiseAction };
enum class SpawnPolicy { kDense, kSparse, kVerySparse };

// State-channel layout of the observation.
//   kOneHot: one indicator per grid cell.
//   kCoords: normalized (x, y).
//   kView:   egocentric wall patch of view_radius plus normalized (x, y);
//            consecutive observations overlap smoothly, like frames.
enum class StateEncoding { kOneHot, kCoords, kView };

NoiseMode noise_mode_from_string(const std::string& s);
SpawnPolicy spawn_policy_from_string(const std::string& s);
StateEncoding state_encoding_from_string(const std::string& s);

struct GridWorldConfig {
  std::vector<std::string> map;  // '#'=wall, '.'=free, 'G'=goal region
  bool procedural = false;       // regenerate a maze every episode
  int width = 15;                // used when procedural
  int height = 15;
  NoiseMode noise_mode = NoiseMode::kOriginal;
  SpawnPolicy spawn = SpawnPolicy::kDense;
  StateEncoding state_encoding = StateEncoding::kOneHot;
  int view_radius = 2;  // kView: (2r+1)^2 patch
  int max_steps = 200;
  int tv_dim = 16;
  int d_near = 4;   // dense: Manhattan spawn distance <= d_near
  int d_far = 16;   // very sparse: distance >= d_far
  int n_tv_patterns = 30;
  std::uint64_t pattern_seed = 7;
};

std::vector<std::string> load_map(const std::string& path);

// Maze navigation with a TV channel appended to the observation.
// Observation = [one-hot agent cell over width*height | tv channel].
// Actions: 0=up 1=down 2=left 3=right 4=tv_toggle.
class GridWorld {
 public:
  static constexpr int kActionUp = 0;
  static constexpr int kActionDown = 1;
  static constexpr int kActionLeft = 2;
  static constexpr int kActionRight = 3;
  static constexpr int kActionTvToggle = 4;
  static constexpr int kNumActions = 5;

  explicit GridWorld(GridWorldConfig config);

  Vector reset(Rng& rng);

  struct StepResult {
    Vector obs;
    double reward = 0.0;
    bool done = false;
  };
  StepResult step(int action, Rng& rng);

  // Observation index partition: {transition-relevant state dims, tv dims}.
  std::pair<std::vector<int>, std::vector<int>> ground_truth_relevance() const;

  int state_dim() const;
  int obs_dim() const { return state_dim() + config_.tv_dim; }
  int num_actions() const { return kNumActions; }
  int width() const { return width_; }
  int height() const { return height_; }
  int steps_in_episode() const { return steps_; }
  std::pair<int, int> agent_pos() const { return {agent_x_, agent_y_}; }
  std::pair<int, int> goal_pos() const { return {goal_x_, goal_y_}; }
  bool is_wall(int x, int y) const { return walls_[y][x]; }
  const Vector& tv_channel() const { return tv_; }

 private:
  void apply_fixed_map(const std::vector<std::string>& map);
  void generate_maze(Rng& rng);
  void place_goal(Rng& rng);
  void spawn_agent(Rng& rng);
  void refresh_tv(Rng& rng);
  Vector observation() const;

  GridWorldConfig config_;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::vector<bool>> walls_;
  std::vector<std::pair<int, int>> goal_region_;  // fixed-map goal cells
  int agent_x_ = 0, agent_y_ = 0;
  int goal_x_ = 0, goal_y_ = 0;
  int steps_ = 0;
  bool episode_active_ = false;
  Vector tv_;
  std::vector<Vector> tv_patterns_;
};

}  // namespace dropbn

#endif  // DROPBN_ENV_HPP_
