#include "dropbn/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dropbn/errors.hpp"

namespace dropbn {

NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "original") return NoiseMode::kOriginal;
  if (s == "image_action") return NoiseMode::kImageAction;
  if (s == "noise") return NoiseMode::kNoise;
  if (s == "noise_action") return NoiseMode::kNoiseAction;
  throw_error(ErrorCode::kConfig, "unknown noise mode: " + s);
}

SpawnPolicy spawn_policy_from_string(const std::string& s) {
  if (s == "dense") return SpawnPolicy::kDense;
  if (s == "sparse") return SpawnPolicy::kSparse;
  if (s == "very_sparse") return SpawnPolicy::kVerySparse;
  throw_error(ErrorCode::kConfig, "unknown spawn policy: " + s);
}

StateEncoding state_encoding_from_string(const std::string& s) {
  if (s == "one_hot") return StateEncoding::kOneHot;
  if (s == "coords") return StateEncoding::kCoords;
  if (s == "view") return StateEncoding::kView;
  throw_error(ErrorCode::kConfig, "unknown state encoding: " + s);
}

std::vector<std::string> load_map(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot open map file: " + path);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  require(!rows.empty(), ErrorCode::kIo, "map file is empty: " + path);
  for (const auto& row : rows)
    require(row.size() == rows[0].size(), ErrorCode::kConfig,
            "map rows have differing widths");
  return rows;
}

GridWorld::GridWorld(GridWorldConfig config) : config_(std::move(config)) {
  if (!config_.map.empty()) {
    apply_fixed_map(config_.map);
  } else {
    width_ = config_.width;
    height_ = config_.height;
    require(width_ >= 5 && height_ >= 5, ErrorCode::kConfig,
            "gridworld needs at least a 5x5 map");
    walls_.assign(height_, std::vector<bool>(width_, true));
  }
  tv_ = Vector::Zero(config_.tv_dim);
  Rng pattern_rng(config_.pattern_seed);
  tv_patterns_.reserve(config_.n_tv_patterns);
  for (int i = 0; i < config_.n_tv_patterns; ++i) {
    Vector pattern(config_.tv_dim);
    for (int j = 0; j < config_.tv_dim; ++j) pattern(j) = pattern_rng.normal();
    tv_patterns_.push_back(std::move(pattern));
  }
}

void GridWorld::apply_fixed_map(const std::vector<std::string>& map) {
  height_ = static_cast<int>(map.size());
  width_ = static_cast<int>(map[0].size());
  walls_.assign(height_, std::vector<bool>(width_, false));
  goal_region_.clear();
  int free_cells = 0;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const char c = map[y][x];
      if (c == '#') {
        walls_[y][x] = true;
      } else if (c == 'G') {
        goal_region_.emplace_back(x, y);
        ++free_cells;
      } else if (c == '.') {
        ++free_cells;
      } else {
        throw_error(ErrorCode::kConfig,
                    std::string("unknown map character: ") + c);
      }
    }
  }
  require(free_cells >= 2, ErrorCode::kConfig,
          "map needs at least two free cells");
  require(!goal_region_.empty(), ErrorCode::kConfig,
          "map defines no goal region");
}

// Recursive-backtracker maze on odd cell coordinates.
void GridWorld::generate_maze(Rng& rng) {
  walls_.assign(height_, std::vector<bool>(width_, true));
  std::vector<std::pair<int, int>> stack;
  auto carve = [&](int x, int y) { walls_[y][x] = false; };
  int sx = 1 + 2 * rng.uniform_int((width_ - 1) / 2);
  int sy = 1 + 2 * rng.uniform_int((height_ - 1) / 2);
  sx = std::min(sx, width_ - 2);
  sy = std::min(sy, height_ - 2);
  carve(sx, sy);
  stack.emplace_back(sx, sy);
  const int dx[4] = {0, 0, -2, 2};
  const int dy[4] = {-2, 2, 0, 0};
  while (!stack.empty()) {
    auto [cx, cy] = stack.back();
    int dirs[4] = {0, 1, 2, 3};
    for (int i = 3; i > 0; --i) std::swap(dirs[i], dirs[rng.uniform_int(i + 1)]);
    bool moved = false;
    for (int dir : dirs) {
      const int nx = cx + dx[dir];
      const int ny = cy + dy[dir];
      if (nx < 1 || ny < 1 || nx >= width_ - 1 || ny >= height_ - 1) continue;
      if (!walls_[ny][nx]) continue;
      carve(nx, ny);
      carve(cx + dx[dir] / 2, cy + dy[dir] / 2);
      stack.emplace_back(nx, ny);
      moved = true;
      break;
    }
    if (!moved) stack.pop_back();
  }
}

void GridWorld::place_goal(Rng& rng) {
  if (!config_.procedural && !goal_region_.empty()) {
    const auto [gx, gy] = goal_region_[rng.uniform_int(
        static_cast<int>(goal_region_.size()))];
    goal_x_ = gx;
    goal_y_ = gy;
    return;
  }
  std::vector<std::pair<int, int>> free;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (!walls_[y][x]) free.emplace_back(x, y);
  require(!free.empty(), ErrorCode::kConfig, "no free cell for the goal");
  const auto [gx, gy] = free[rng.uniform_int(static_cast<int>(free.size()))];
  goal_x_ = gx;
  goal_y_ = gy;
}

void GridWorld::spawn_agent(Rng& rng) {
  std::vector<std::pair<int, int>> candidates;
  int max_dist = 0;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (!walls_[y][x] && !(x == goal_x_ && y == goal_y_))
        max_dist = std::max(max_dist,
                            std::abs(x - goal_x_) + std::abs(y - goal_y_));
  // clip the policy thresholds to what the map can offer
  const int near = std::min(config_.d_near, max_dist);
  const int far = std::min(config_.d_far, max_dist);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (walls_[y][x] || (x == goal_x_ && y == goal_y_)) continue;
      const int dist = std::abs(x - goal_x_) + std::abs(y - goal_y_);
      bool ok = false;
      switch (config_.spawn) {
        case SpawnPolicy::kDense:
          ok = dist <= near;
          break;
        case SpawnPolicy::kSparse:
          ok = dist > near && dist < far;
          break;
        case SpawnPolicy::kVerySparse:
          ok = dist >= far;
          break;
      }
      if (ok) candidates.emplace_back(x, y);
    }
  }
  require(!candidates.empty(), ErrorCode::kConfig,
          "no free cell satisfies the spawn policy");
  const auto [ax, ay] =
      candidates[rng.uniform_int(static_cast<int>(candidates.size()))];
  agent_x_ = ax;
  agent_y_ = ay;
}

void GridWorld::refresh_tv(Rng& rng) {
  switch (config_.noise_mode) {
    case NoiseMode::kOriginal:
      tv_.setZero();
      break;
    case NoiseMode::kImageAction:
      tv_ = tv_patterns_[rng.uniform_int(config_.n_tv_patterns)];
      break;
    case NoiseMode::kNoise:
    case NoiseMode::kNoiseAction:
      for (int j = 0; j < config_.tv_dim; ++j) tv_(j) = rng.normal();
      break;
  }
}

int GridWorld::state_dim() const {
  switch (config_.state_encoding) {
    case StateEncoding::kOneHot:
      return width_ * height_;
    case StateEncoding::kCoords:
      return 2;
    case StateEncoding::kView: {
      const int side = 2 * config_.view_radius + 1;
      return side * side + 2;
    }
  }
  return width_ * height_;
}

Vector GridWorld::observation() const {
  Vector obs = Vector::Zero(obs_dim());
  switch (config_.state_encoding) {
    case StateEncoding::kOneHot:
      obs(agent_y_ * width_ + agent_x_) = 1.0;
      break;
    case StateEncoding::kCoords:
      obs(0) = static_cast<double>(agent_x_) / width_;
      obs(1) = static_cast<double>(agent_y_) / height_;
      break;
    case StateEncoding::kView: {
      const int r = config_.view_radius;
      int k = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx, ++k) {
          const int x = agent_x_ + dx;
          const int y = agent_y_ + dy;
          const bool wall =
              x < 0 || y < 0 || x >= width_ || y >= height_ || walls_[y][x];
          obs(k) = wall ? 1.0 : 0.0;
        }
      }
      obs(k) = static_cast<double>(agent_x_) / width_;
      obs(k + 1) = static_cast<double>(agent_y_) / height_;
      break;
    }
  }
  obs.tail(config_.tv_dim) = tv_;
  return obs;
}

Vector GridWorld::reset(Rng& rng) {
  if (config_.procedural) {
    generate_maze(rng);
  }
  place_goal(rng);
  spawn_agent(rng);
  steps_ = 0;
  episode_active_ = true;
  refresh_tv(rng);  // initial screen content for every mode
  return observation();
}

GridWorld::StepResult GridWorld::step(int action, Rng& rng) {
  require(episode_active_, ErrorCode::kRuntime,
          "step called before reset or after episode end");
  require(action >= 0 && action < kNumActions, ErrorCode::kInvalidArgument,
          "invalid action index");
  int nx = agent_x_;
  int ny = agent_y_;
  switch (action) {
    case kActionUp: ny -= 1; break;
    case kActionDown: ny += 1; break;
    case kActionLeft: nx -= 1; break;
    case kActionRight: nx += 1; break;
    default: break;  // tv toggle, no movement
  }
  if (nx >= 0 && ny >= 0 && nx < width_ && ny < height_ && !walls_[ny][nx]) {
    agent_x_ = nx;
    agent_y_ = ny;
  }

  switch (config_.noise_mode) {
    case NoiseMode::kNoise:
      refresh_tv(rng);  // new pattern every step
      break;
    case NoiseMode::kImageAction:
    case NoiseMode::kNoiseAction:
      if (action == kActionTvToggle) refresh_tv(rng);
      break;
    case NoiseMode::kOriginal:
      break;
  }

  steps_ += 1;
  StepResult result;
  const bool reached = agent_x_ == goal_x_ && agent_y_ == goal_y_;
  result.reward = reached ? 1.0 : 0.0;
  result.done = reached || steps_ >= config_.max_steps;
  if (result.done) episode_active_ = false;
  result.obs = observation();
  return result;
}

std::pair<std::vector<int>, std::vector<int>>
GridWorld::ground_truth_relevance() const {
  const int sd = state_dim();
  std::vector<int> state_dims(sd);
  std::vector<int> tv_dims(config_.tv_dim);
  for (int i = 0; i < sd; ++i) state_dims[i] = i;
  for (int i = 0; i < config_.tv_dim; ++i) tv_dims[i] = sd + i;
  return {state_dims, tv_dims};
}

}  // namespace dropbn
