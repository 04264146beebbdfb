#pragma once

#include <random>
#include <utility>

#include "rrl/env.hpp"

namespace rrl {

// Actions shared by all grid environments.
enum GridAction { kLeft = 0, kDown = 1, kRight = 2, kUp = 3 };

struct GridSpec {
  int rows = 0;
  int cols = 0;
  int start_row = 0, start_col = 0;
  int goal_row = 0, goal_col = 0;
  std::vector<std::pair<int, int>> hazards;
  bool hazard_terminal = false;  // false: hazard teleports back to start
  bool slippery = false;         // 1/3 intended move, 1/3 each perpendicular
  double step_cost = 1.0;
  double hazard_cost = 0.0;
  double goal_cost = 1.0;
};

std::vector<std::string> validate_grid(const GridSpec& spec);

// ASCII map: S start, G goal, H hazard, . free cell.
std::string grid_ascii(const GridSpec& spec);

class GridEnv final : public TabularEnv {
 public:
  explicit GridEnv(GridSpec spec);  // throws std::invalid_argument when invalid

  int n_states() const override { return spec_.rows * spec_.cols; }
  int n_actions() const override { return 4; }
  void seed(std::uint64_t s) override { rng_.seed(s); }
  int reset() override;
  StepOut step(int action) override;
  int state() const override { return state_; }
  void set_state(int s) override;
  bool terminal(int s) const override;
  TabularMdp to_mdp(double gamma) const override;
  std::unique_ptr<TabularEnv> clone() const override;

  const GridSpec& spec() const { return spec_; }
  int cell(int row, int col) const { return row * spec_.cols + col; }

 private:
  struct Outcome {
    int next = 0;
    double cost = 0.0;
    bool done = false;
  };
  Outcome move(int s, int dir) const;  // one deterministic directional move
  bool hazard(int s) const;

  GridSpec spec_;
  std::vector<bool> hazard_mask_;
  int start_ = 0, goal_ = 0;
  int state_ = 0;
  std::mt19937_64 rng_{0};
};

// 4x12 walk along a cliff edge: unit step cost, falling costs 100 and
// teleports back to the start, the goal ends the episode.
GridSpec cliffwalking_spec();

// 8x8 frozen lake, optionally slippery: free steps, holes end the episode at
// zero cost, the goal step is worth -1 (reward 1).
GridSpec frozenlake_spec(bool slippery);

std::unique_ptr<TabularEnv> make_cliffwalking();
std::unique_ptr<TabularEnv> make_frozenlake(bool slippery);

}  // namespace rrl
